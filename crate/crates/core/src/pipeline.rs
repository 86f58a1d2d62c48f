//! Decompose → lag choice → SURE design → estimation → hypothesis catalog.

use serde::{Deserialize, Serialize};

use crate::decomposition::{decompose, DeterministicSpec, Series, SignedComponents};
use crate::error::{Error, Result};
use crate::mgarch::{arch_lm_diag, fit_sure_garch_t, ArchLmResult, GarchFit};
use crate::sure::{
    build_design, fgls_fit, ols_fit, select_lags, CoefficientEstimate, Criterion, Estimator, LagSelection, SureSystem,
    DEFAULT_FGLS_MAX_ITER, DEFAULT_FGLS_TOL,
};
use crate::wald::{run_catalog, RestrictionMode, WaldResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LagChoice {
    Fixed { positive: usize, negative: usize },
    Select { p_max: usize, criterion: Criterion },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorChoice {
    Ols,
    #[default]
    Fgls,
    GarchT,
    /// FGLS unless the ARCH diagnostic rejects at `arch_level`.
    Auto,
}

impl std::str::FromStr for EstimatorChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ols" => Ok(Self::Ols),
            "fgls" => Ok(Self::Fgls),
            "garch_t" | "garch-t" | "garch" => Ok(Self::GarchT),
            "auto" => Ok(Self::Auto),
            other => Err(Error::InvalidArgument(format!("unknown estimator `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOptions {
    pub deterministic: DeterministicSpec,
    pub lags: LagChoice,
    pub extra_lags: usize,
    pub estimator: EstimatorChoice,
    pub restriction: RestrictionMode,
    pub arch_lags: usize,
    pub arch_level: f64,
    /// Skip the ARCH diagnostic unless the estimator choice needs it.
    pub arch_diagnostic: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            deterministic: DeterministicSpec::Drift,
            lags: LagChoice::Select { p_max: 8, criterion: Criterion::Sbc },
            extra_lags: 1,
            estimator: EstimatorChoice::Fgls,
            restriction: RestrictionMode::PerLag,
            arch_lags: 1,
            arch_level: 0.05,
            arch_diagnostic: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub components: Vec<SignedComponents>,
    pub lag_selection: Option<LagSelection>,
    pub system: SureSystem,
    pub estimate: CoefficientEstimate,
    pub garch: Option<GarchFit>,
    pub arch: Option<ArchLmResult>,
    pub results: Vec<WaldResult>,
    pub warnings: Vec<String>,
}

impl Analysis {
    pub fn estimator(&self) -> Estimator {
        self.estimate.estimator
    }
}

pub fn analyze(series: &[Series], options: &PipelineOptions) -> Result<Analysis> {
    if series.len() < 2 {
        return Err(Error::InvalidArgument(format!("need at least two series, got {}", series.len())));
    }
    let components = series.iter().map(|s| decompose(s, options.deterministic)).collect::<Result<Vec<_>>>()?;
    let mut warnings = Vec::new();
    for c in &components {
        for w in &c.warnings {
            warnings.push(format!("series `{}`: {w:?}", c.name));
        }
    }

    let (lag_selection, (p_pos, p_neg)) = match options.lags {
        LagChoice::Fixed { positive, negative } => (None, (positive, negative)),
        LagChoice::Select { p_max, criterion } => {
            let sel = select_lags(&components, p_max, criterion)?;
            let orders = (sel.positive, sel.negative);
            (Some(sel), orders)
        }
    };
    let system = build_design(&components, p_pos, p_neg, options.extra_lags)?;

    let needs_arch = options.estimator == EstimatorChoice::Auto;
    let first = match options.estimator {
        EstimatorChoice::Ols => ols_fit(&system)?,
        _ => fgls_fit(&system, DEFAULT_FGLS_TOL, DEFAULT_FGLS_MAX_ITER)?,
    };
    if first.estimator == Estimator::Fgls && !first.converged {
        warnings.push(format!("FGLS did not converge within {} iterations", first.iterations));
    }

    let arch = if options.arch_diagnostic || needs_arch {
        match arch_lm_diag(&first.residuals, options.arch_lags) {
            Ok(r) => Some(r),
            Err(e) if !needs_arch => {
                warnings.push(format!("ARCH diagnostic skipped: {e}"));
                None
            }
            Err(e) => return Err(e),
        }
    } else {
        None
    };

    let use_garch = match options.estimator {
        EstimatorChoice::GarchT => true,
        EstimatorChoice::Auto => arch.is_some_and(|a| a.p_value < options.arch_level),
        _ => false,
    };
    let (estimate, garch) = if use_garch {
        let fit = fit_sure_garch_t(&system, Some(&first))?;
        warnings.extend(fit.warnings.iter().cloned());
        (fit.mean.clone(), Some(fit))
    } else {
        (first, None)
    };

    let results = run_catalog(&estimate, &system.layout, options.restriction)?;
    Ok(Analysis { components, lag_selection, system, estimate, garch, arch, results, warnings })
}
