use std::path::PathBuf;

use asymcause_core::decomposition::DeterministicSpec;
use asymcause_core::pipeline::{EstimatorChoice, LagChoice, PipelineOptions};
use asymcause_core::sure::Criterion;
use asymcause_core::wald::RestrictionMode;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::input::ColumnSelector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSpec {
    pub path: PathBuf,
    #[serde(default)]
    pub columns: ColumnSelector,
}

impl InputSpec {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self { path: path.into(), columns: ColumnSelector::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Text,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "text" => Ok(Self::Text),
            "json" => Ok(Self::Json),
            other => Err(CliError::Config(format!("unknown output format `{other}`"))),
        }
    }
}

/// Everything `run_pipeline` needs. Variable 1 is the first input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub inputs: Vec<InputSpec>,
    pub log_transform: bool,
    pub deterministic: DeterministicSpec,
    pub p_max: usize,
    pub criterion: Criterion,
    /// `(P⁺, P⁻)`; skips lag selection when set.
    pub fixed_lags: Option<(usize, usize)>,
    pub extra_lags: usize,
    pub estimator: EstimatorChoice,
    pub restriction: RestrictionMode,
    /// Significance level for the reported reject/retain decisions and the
    /// `auto` estimator gate.
    pub level: f64,
    pub arch_lags: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            inputs: Vec::new(),
            log_transform: false,
            deterministic: DeterministicSpec::Drift,
            p_max: 8,
            criterion: Criterion::Sbc,
            fixed_lags: None,
            extra_lags: 1,
            estimator: EstimatorChoice::Fgls,
            restriction: RestrictionMode::PerLag,
            level: 0.05,
            arch_lags: 1,
            seed: 0,
            output: None,
            format: OutputFormat::Text,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> CliResult<()> {
        if self.inputs.len() < 2 {
            return Err(CliError::Config(format!("at least two inputs are required, got {}", self.inputs.len())));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(CliError::Config(format!("level must lie in (0, 1), got {}", self.level)));
        }
        if self.fixed_lags.is_none() && self.p_max == 0 {
            return Err(CliError::Config("max lag must be at least 1".into()));
        }
        if matches!(self.fixed_lags, Some((p, n)) if p == 0 || n == 0) {
            return Err(CliError::Config("fixed lag orders must be at least 1".into()));
        }
        Ok(())
    }

    pub fn pipeline_options(&self) -> PipelineOptions {
        PipelineOptions {
            deterministic: self.deterministic,
            lags: match self.fixed_lags {
                Some((positive, negative)) => LagChoice::Fixed { positive, negative },
                None => LagChoice::Select { p_max: self.p_max, criterion: self.criterion },
            },
            extra_lags: self.extra_lags,
            estimator: self.estimator,
            restriction: self.restriction,
            arch_lags: self.arch_lags,
            arch_level: self.level,
            arch_diagnostic: true,
        }
    }
}
