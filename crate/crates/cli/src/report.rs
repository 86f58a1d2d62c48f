//! Pipeline orchestration and the text/json report.

use std::fmt::Write as _;

use asymcause_core::decomposition::{Series, SignedComponents};
use asymcause_core::mgarch::ArchLmResult;
use asymcause_core::montecarlo::SizeStudy;
use asymcause_core::pipeline::analyze;
use asymcause_core::sure::{Estimator, LagSelection};
use asymcause_core::wald::HypothesisId;
use serde::{Deserialize, Serialize};

use crate::config::{AnalysisConfig, OutputFormat};
use crate::error::{CliError, CliResult};
use crate::input::{align_on_dates, load_csv, log_transform, LoadedSeries};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub equation: String,
    pub name: String,
    pub value: f64,
    pub std_error: f64,
    /// False for the unrestricted lag-augmentation terms.
    pub restricted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisRow {
    pub id: HypothesisId,
    pub label: String,
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub rejected: bool,
    pub implication: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarchSummary {
    pub omega: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub correlation: Vec<Vec<f64>>,
    pub nu: f64,
    pub loglik: f64,
    pub initial_loglik: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub arch: Option<ArchLmResult>,
    pub lag_selection: Option<LagSelection>,
    pub fgls_iterations: Option<usize>,
    pub fgls_converged: Option<bool>,
    pub garch: Option<GarchSummary>,
    pub warnings: Vec<String>,
}

impl Diagnostics {
    pub fn is_empty(&self) -> bool {
        self.arch.is_none()
            && self.lag_selection.is_none()
            && self.fgls_iterations.is_none()
            && self.garch.is_none()
            && self.warnings.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub estimator: Estimator,
    pub variables: Vec<String>,
    pub observations: usize,
    pub sample_start: Option<String>,
    pub sample_end: Option<String>,
    pub effective_sample: usize,
    pub effective_start: Option<String>,
    pub lag_orders: (usize, usize),
    pub extra_lags: usize,
    pub software: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: AnalysisConfig,
    pub estimates: Vec<EstimateRow>,
    pub hypotheses: Vec<HypothesisRow>,
    pub diagnostics: Diagnostics,
    pub provenance: Provenance,
}

/// Load every input, align on common dates, then analyze.
pub fn run_pipeline(config: &AnalysisConfig) -> CliResult<Report> {
    config.validate()?;
    let mut loaded = Vec::with_capacity(config.inputs.len());
    for input in &config.inputs {
        let s = load_csv(&input.path, &input.columns)?;
        loaded.push(if config.log_transform { log_transform(&s, &input.path)? } else { s });
    }
    let aligned = align_on_dates(&loaded)?;
    let mut warnings = Vec::new();
    for (before, after) in loaded.iter().zip(&aligned) {
        if before.len() != after.len() {
            warnings.push(format!(
                "series `{}`: {} of {} rows dropped to align dates",
                before.name,
                before.len() - after.len(),
                before.len()
            ));
        }
    }
    let mut report = analyze_loaded(config, &aligned)?;
    warnings.append(&mut report.diagnostics.warnings);
    report.diagnostics.warnings = warnings;
    Ok(report)
}

/// Analyze already aligned series; `config.inputs` is only echoed.
pub fn analyze_loaded(config: &AnalysisConfig, series: &[LoadedSeries]) -> CliResult<Report> {
    if series.len() < 2 {
        return Err(CliError::Config(format!("at least two series are required, got {}", series.len())));
    }
    let mut names: Vec<String> = Vec::with_capacity(series.len());
    let core_series = series
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut name = s.name.clone();
            if names.contains(&name) {
                name = format!("{name}_{}", i + 1);
            }
            names.push(name.clone());
            Series::new(name, s.values.clone()).and_then(|x| x.with_timestamps(s.dates.clone()))
        })
        .collect::<asymcause_core::Result<Vec<_>>>()
        .map_err(CliError::core("loading series"))?;

    let analysis = analyze(&core_series, &config.pipeline_options()).map_err(CliError::core("analysis"))?;
    let layout = &analysis.system.layout;
    let se = analysis.estimate.std_errors();
    let mut estimates = Vec::with_capacity(layout.len());
    for eq in &layout.equations {
        for (j, entry) in eq.entries.iter().enumerate() {
            let pos = eq.offset + j;
            estimates.push(EstimateRow {
                equation: eq.name.clone(),
                name: entry.name.clone(),
                value: analysis.estimate.coefficients[pos],
                std_error: se[pos],
                restricted: entry.restricted,
            });
        }
    }
    let hypotheses = analysis
        .results
        .iter()
        .map(|r| HypothesisRow {
            id: r.hypothesis.id,
            label: r.hypothesis.label.clone(),
            statistic: r.statistic,
            dof: r.dof,
            p_value: r.p_value,
            rejected: r.p_value < config.level,
            implication: r.hypothesis.implication.clone(),
        })
        .collect();

    let fgls = analysis.garch.is_none() && analysis.estimator() == Estimator::Fgls;
    let diagnostics = Diagnostics {
        arch: analysis.arch,
        lag_selection: analysis.lag_selection.clone(),
        fgls_iterations: fgls.then_some(analysis.estimate.iterations),
        fgls_converged: fgls.then_some(analysis.estimate.converged),
        garch: analysis.garch.as_ref().map(|g| GarchSummary {
            omega: g.garch.omega.clone(),
            alpha: g.garch.alpha.clone(),
            beta: g.garch.beta.clone(),
            correlation: g.garch.correlation.row_iter().map(|r| r.iter().copied().collect()).collect(),
            nu: g.garch.nu,
            loglik: g.loglik,
            initial_loglik: g.initial_loglik,
            iterations: g.iterations,
            converged: g.converged,
        }),
        warnings: analysis.warnings.clone(),
    };

    let dates = &series[0].dates;
    let provenance = Provenance {
        estimator: analysis.estimator(),
        variables: names,
        observations: dates.len(),
        sample_start: dates.first().cloned(),
        sample_end: dates.last().cloned(),
        effective_sample: analysis.system.effective_sample,
        effective_start: dates.get(analysis.system.sample_start).cloned(),
        lag_orders: analysis.system.lag_orders,
        extra_lags: analysis.system.extra_lags,
        software: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
    };
    Ok(Report { config: config.clone(), estimates, hypotheses, diagnostics, provenance })
}

pub fn format_p_value(p: f64) -> String {
    if p < 1e-5 {
        "< 0.00001".into()
    } else {
        format!("{p:.5}")
    }
}

pub fn render_report(report: &Report, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report values are finite");
            s.push('\n');
            s
        }
        OutputFormat::Text => render_text(report),
    }
}

fn render_text(report: &Report) -> String {
    let p = &report.provenance;
    let mut out = String::new();
    let vars: Vec<String> = p.variables.iter().enumerate().map(|(i, v)| format!("{} = {v}", i + 1)).collect();
    let _ = writeln!(out, "Asymmetric causality tests (variables: {})", vars.join(", "));
    let _ = writeln!(
        out,
        "Sample: {} to {}, {} observations; regression sample {} from {}",
        p.sample_start.as_deref().unwrap_or("?"),
        p.sample_end.as_deref().unwrap_or("?"),
        p.observations,
        p.effective_sample,
        p.effective_start.as_deref().unwrap_or("?"),
    );
    let _ = writeln!(
        out,
        "Lags: P+ = {}, P- = {}, extra lags = {}; estimator: {}",
        p.lag_orders.0, p.lag_orders.1, p.extra_lags, p.estimator
    );

    let _ = writeln!(out, "\nEstimates");
    let eq_w = report.estimates.iter().map(|e| e.equation.len()).max().unwrap_or(0).max(8);
    let name_w = report.estimates.iter().map(|e| e.name.len()).max().unwrap_or(0).max(11);
    let _ = writeln!(out, "  {:<eq_w$}  {:<name_w$}  {:>12}  {:>12}", "equation", "coefficient", "estimate", "std. error");
    for e in &report.estimates {
        let mark = if e.restricted { "" } else { "  (augmentation)" };
        let _ = writeln!(out, "  {:<eq_w$}  {:<name_w$}  {:>12.6}  {:>12.6}{mark}", e.equation, e.name, e.value, e.std_error);
    }

    let _ = writeln!(out, "\nHypotheses (level {})", report.config.level);
    let label_w = report.hypotheses.iter().map(|h| h.label.len()).max().unwrap_or(0).max(15);
    let _ = writeln!(
        out,
        "  {:<4}  {:<label_w$}  {:>12}  {:>3}  {:>10}  {:<7}  implication",
        "", "null hypothesis", "statistic", "dof", "p-value", "decision"
    );
    for h in &report.hypotheses {
        let _ = writeln!(
            out,
            "  {:<4}  {:<label_w$}  {:>12.4}  {:>3}  {:>10}  {:<8} {}",
            h.id.to_string(),
            h.label,
            h.statistic,
            h.dof,
            format_p_value(h.p_value),
            if h.rejected { "reject" } else { "retain" },
            h.implication
        );
    }

    let d = &report.diagnostics;
    if !d.is_empty() {
        let _ = writeln!(out, "\nDiagnostics");
        if let Some(a) = &d.arch {
            let _ = writeln!(
                out,
                "  multivariate ARCH LM ({} lag{}): statistic {:.4}, dof {}, p-value {}",
                a.lags,
                if a.lags == 1 { "" } else { "s" },
                a.statistic,
                a.dof,
                format_p_value(a.p_value)
            );
        }
        if let Some(sel) = &d.lag_selection {
            let _ = writeln!(out, "  lag selection ({:?}): P+ = {}, P- = {}", sel.criterion, sel.positive, sel.negative);
            for c in &sel.trace {
                let _ = writeln!(out, "    p = {:<3} positive {:>14.6}  negative {:>14.6}", c.lag, c.positive, c.negative);
            }
        }
        if let (Some(it), Some(conv)) = (d.fgls_iterations, d.fgls_converged) {
            let _ = writeln!(out, "  FGLS: {it} iterations, {}", if conv { "converged" } else { "not converged" });
        }
        if let Some(g) = &d.garch {
            let _ = writeln!(
                out,
                "  CCC-GARCH(1,1)-t: loglik {:.4} (start {:.4}), {} iterations, {}",
                g.loglik,
                g.initial_loglik,
                g.iterations,
                if g.converged { "converged" } else { "not converged" }
            );
            for i in 0..g.omega.len() {
                let _ = writeln!(out, "    eq {}: omega {:.6}  alpha {:.6}  beta {:.6}", i + 1, g.omega[i], g.alpha[i], g.beta[i]);
            }
            let _ = writeln!(out, "    nu {:.4}", g.nu);
        }
        for w in &d.warnings {
            let _ = writeln!(out, "  warning: {w}");
        }
    }
    out
}

/// `DATE,POSITIVE,NEGATIVE`; dates fall back to the observation index.
pub fn components_csv(components: &SignedComponents) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["DATE", "POSITIVE", "NEGATIVE"]).expect("in-memory write");
    for t in 0..components.len() {
        let date = components.timestamps.as_ref().map_or_else(|| t.to_string(), |d| d[t].clone());
        w.write_record([date, components.positive[t].to_string(), components.negative[t].to_string()])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

pub fn render_size_study(study: &SizeStudy, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(study).expect("rates are finite");
            s.push('\n');
            s
        }
        OutputFormat::Text => {
            let mut out = String::new();
            let _ = writeln!(
                out,
                "Rejection rates at level {} over {} replications ({} failed)",
                study.level,
                study.reps,
                study.failures
            );
            for r in &study.rates {
                let _ = writeln!(out, "  {:<4} {:>8.4}  ({} rejections)", r.hypothesis.to_string(), r.rate, r.rejections);
            }
            out
        }
    }
}
