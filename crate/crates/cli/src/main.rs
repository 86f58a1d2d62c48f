use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use asymcause_cli::config::{AnalysisConfig, InputSpec, OutputFormat};
use asymcause_cli::input::{load_csv, ColumnSelector};
use asymcause_cli::report::{components_csv, render_report, render_size_study, run_pipeline};
use asymcause_core::decomposition::{decompose, DeterministicSpec, Series};
use asymcause_core::montecarlo::{empirical_size, CausalFeedback, DgpConfig};
use asymcause_core::pipeline::{EstimatorChoice, LagChoice, PipelineOptions};
use asymcause_core::sure::Criterion;
use asymcause_core::wald::RestrictionMode;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "asymcause", version, about = "Asymmetric causality tests on cumulative positive and negative shocks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full test battery on two or more series.
    Run(RunArgs),
    /// Write the positive/negative cumulative components of each input.
    Decompose(DecomposeArgs),
    /// Empirical size (or power, with --feedback) on simulated random walks.
    McSize(McArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Deterministic {
    None,
    Drift,
    DriftAndTrend,
}

impl From<Deterministic> for DeterministicSpec {
    fn from(d: Deterministic) -> Self {
        match d {
            Deterministic::None => DeterministicSpec::None,
            Deterministic::Drift => DeterministicSpec::Drift,
            Deterministic::DriftAndTrend => DeterministicSpec::DriftAndTrend,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Ic {
    Aic,
    Sbc,
    Hq,
}

impl From<Ic> for Criterion {
    fn from(c: Ic) -> Self {
        match c {
            Ic::Aic => Criterion::Aic,
            Ic::Sbc => Criterion::Sbc,
            Ic::Hq => Criterion::Hq,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimatorArg {
    Ols,
    Fgls,
    GarchT,
    Auto,
}

impl From<EstimatorArg> for EstimatorChoice {
    fn from(e: EstimatorArg) -> Self {
        match e {
            EstimatorArg::Ols => EstimatorChoice::Ols,
            EstimatorArg::Fgls => EstimatorChoice::Fgls,
            EstimatorArg::GarchT => EstimatorChoice::GarchT,
            EstimatorArg::Auto => EstimatorChoice::Auto,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Restriction {
    PerLag,
    Sum,
}

impl From<Restriction> for RestrictionMode {
    fn from(r: Restriction) -> Self {
        match r {
            Restriction::PerLag => RestrictionMode::PerLag,
            Restriction::Sum => RestrictionMode::Sum,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Text => OutputFormat::Text,
            Format::Json => OutputFormat::Json,
        }
    }
}

#[derive(Args)]
struct ColumnArgs {
    /// Name of the date column.
    #[arg(long, default_value = "DATE")]
    date_column: String,
    /// Name of the value column; two-column files fall back to the second column.
    #[arg(long, default_value = "VALUE")]
    value_column: String,
}

impl ColumnArgs {
    fn selector(&self) -> ColumnSelector {
        ColumnSelector { date: self.date_column.clone(), value: self.value_column.clone() }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Input CSV files; the first is variable 1.
    #[arg(long, num_args = 2.., required = true)]
    input: Vec<PathBuf>,
    #[command(flatten)]
    columns: ColumnArgs,
    /// Take natural logarithms before decomposing.
    #[arg(long)]
    log: bool,
    #[arg(long, value_enum, default_value = "drift")]
    deterministic: Deterministic,
    #[arg(long, default_value_t = 8)]
    max_lag: usize,
    #[arg(long, value_enum, default_value = "sbc")]
    criterion: Ic,
    /// Fix the lag order of both sign blocks instead of selecting it.
    #[arg(long, conflicts_with = "lags")]
    lag: Option<usize>,
    /// Fix `P+,P-` separately, e.g. `2,1`.
    #[arg(long, value_parser = parse_pair)]
    lags: Option<(usize, usize)>,
    #[arg(long, default_value_t = 1)]
    extra_lags: usize,
    #[arg(long, value_enum, default_value = "fgls")]
    estimator: EstimatorArg,
    #[arg(long, value_enum, default_value = "per-lag")]
    restriction: Restriction,
    #[arg(long, default_value_t = 0.05)]
    level: f64,
    #[arg(long, default_value_t = 1)]
    arch_lags: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DecomposeArgs {
    #[arg(long, num_args = 1.., required = true)]
    input: Vec<PathBuf>,
    #[command(flatten)]
    columns: ColumnArgs,
    #[arg(long)]
    log: bool,
    #[arg(long, value_enum, default_value = "drift")]
    deterministic: Deterministic,
    /// Output file for a single input, or directory for several.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct McArgs {
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    /// Number of increments per simulated series.
    #[arg(long = "T", default_value_t = 300)]
    t_len: usize,
    #[arg(long, default_value_t = 2)]
    variables: usize,
    #[arg(long, default_value_t = 0.1)]
    drift: f64,
    /// Coefficient on lagged positive shocks of variable 2 in variable 1.
    #[arg(long)]
    feedback: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    level: f64,
    #[arg(long, default_value_t = 1)]
    lag: usize,
    #[arg(long, default_value_t = 1)]
    extra_lags: usize,
    #[arg(long, value_enum, default_value = "fgls")]
    estimator: EstimatorArg,
    #[arg(long, value_enum, default_value = "per-lag")]
    restriction: Restriction,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected `P+,P-`, got `{s}`"))?;
    let parse = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("`{x}`: {e}"));
    Ok((parse(a)?, parse(b)?))
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(args: RunArgs) -> Result<()> {
    let config = AnalysisConfig {
        inputs: args.input.iter().map(|p| InputSpec { path: p.clone(), columns: args.columns.selector() }).collect(),
        log_transform: args.log,
        deterministic: args.deterministic.into(),
        p_max: args.max_lag,
        criterion: args.criterion.into(),
        fixed_lags: args.lags.or(args.lag.map(|p| (p, p))),
        extra_lags: args.extra_lags,
        estimator: args.estimator.into(),
        restriction: args.restriction.into(),
        level: args.level,
        arch_lags: args.arch_lags,
        seed: args.seed,
        output: args.out.clone(),
        format: args.format.into(),
    };
    let report = run_pipeline(&config)?;
    emit(&render_report(&report, config.format), args.out.as_ref())
}

fn decompose_files(args: DecomposeArgs) -> Result<()> {
    let several = args.input.len() > 1;
    if several {
        if let Some(dir) = &args.out {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
    }
    for path in &args.input {
        let loaded = load_csv(path, &args.columns.selector())?;
        let mut series = Series::new(loaded.name.clone(), loaded.values)
            .and_then(|s| s.with_timestamps(loaded.dates))
            .with_context(|| format!("{}", path.display()))?;
        if args.log {
            series = series.ln().with_context(|| format!("log of {}", path.display()))?;
        }
        let parts = decompose(&series, args.deterministic.into()).with_context(|| format!("{}", path.display()))?;
        for w in &parts.warnings {
            eprintln!("warning: {}: {w:?}", path.display());
        }
        let text = components_csv(&parts);
        match (&args.out, several) {
            (Some(dir), true) => {
                let stem = path.file_stem().map_or_else(|| loaded.name.clone(), |s| s.to_string_lossy().into_owned());
                emit(&text, Some(&dir.join(format!("{stem}_components.csv"))))?;
            }
            (out, false) => emit(&text, out.as_ref())?,
            (None, true) => {
                println!("# {}", path.display());
                print!("{text}");
            }
        }
    }
    Ok(())
}

fn mc_size(args: McArgs) -> Result<()> {
    if args.lag == 0 {
        bail!("--lag must be at least 1");
    }
    let mut dgp = DgpConfig::independent_walks(args.variables, args.drift, args.t_len, args.seed);
    dgp.causal_feedback = args.feedback.map(CausalFeedback::positive_into_first);
    let options = PipelineOptions {
        lags: LagChoice::Fixed { positive: args.lag, negative: args.lag },
        extra_lags: args.extra_lags,
        estimator: args.estimator.into(),
        restriction: args.restriction.into(),
        arch_diagnostic: false,
        arch_level: args.level,
        ..PipelineOptions::default()
    };
    let study = empirical_size(&dgp, args.reps, args.level, &options)?;
    emit(&render_size_study(&study, args.format.into()), None)
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(a) => run(a),
        Command::Decompose(a) => decompose_files(a),
        Command::McSize(a) => mc_size(a),
    }
}
