//! Synthetic integrated series and rejection-rate studies.
//!
//! Each series follows `Z_{i,t} = a_i + b_i t + Z_{i,t−1} + e_{i,t}` for
//! `t = 1..T`, so a simulated series has `T + 1` observations including
//! `Z_{i,0}`. Replication `r` of a study draws from ChaCha stream `r` of the
//! configured seed, which keeps replications independent of execution order.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decomposition::Series;
use crate::error::{Error, Result};
use crate::pipeline::{analyze, PipelineOptions};
use crate::sure::Sign;
use crate::wald::HypothesisId;

pub const MIN_DGP_LEN: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorTail {
    Gaussian,
    /// Student t with the given degrees of freedom, scaled to unit variance.
    StudentT(f64),
}

/// Lagged signed innovations of variable `from` added to the increments of
/// variable `to`: `ΔZ_to,t += coefficient · e^{sign}_{from,t−1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CausalFeedback {
    pub from: usize,
    pub to: usize,
    pub sign: Sign,
    pub coefficient: f64,
}

impl CausalFeedback {
    /// Positive shocks of variable 2 driving variable 1, the direction
    /// measured by `beta+[2,·]`.
    pub fn positive_into_first(coefficient: f64) -> Self {
        Self { from: 1, to: 0, sign: Sign::Positive, coefficient }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DgpConfig {
    pub m: usize,
    pub drift: Vec<f64>,
    pub trend: Vec<f64>,
    pub initial: Vec<f64>,
    pub error_correlation: DMatrix<f64>,
    pub error_tail: ErrorTail,
    pub causal_feedback: Option<CausalFeedback>,
    pub t_len: usize,
    pub seed: u64,
}

impl DgpConfig {
    /// Independent Gaussian random walks with a common drift.
    pub fn independent_walks(m: usize, drift: f64, t_len: usize, seed: u64) -> Self {
        Self {
            m,
            drift: vec![drift; m],
            trend: vec![0.0; m],
            initial: vec![0.0; m],
            error_correlation: DMatrix::identity(m, m),
            error_tail: ErrorTail::Gaussian,
            causal_feedback: None,
            t_len,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.m;
        if m == 0 || self.drift.len() != m || self.trend.len() != m || self.initial.len() != m {
            return Err(Error::LengthMismatch(format!("DGP coefficient vectors must have length m = {m}")));
        }
        if self.error_correlation.shape() != (m, m) {
            return Err(Error::LengthMismatch("error correlation must be m × m".into()));
        }
        let r = &self.error_correlation;
        if (0..m).any(|i| (r[(i, i)] - 1.0).abs() > 1e-12) || (r - r.transpose()).amax() > 1e-12 {
            return Err(Error::InvalidArgument("error correlation must be symmetric with a unit diagonal".into()));
        }
        if r.clone().cholesky().is_none() {
            return Err(Error::NotPositiveDefinite("DGP error correlation".into()));
        }
        if self.t_len < MIN_DGP_LEN {
            return Err(Error::InvalidArgument(format!("T must be at least {MIN_DGP_LEN}, got {}", self.t_len)));
        }
        if let ErrorTail::StudentT(df) = self.error_tail {
            if !(df > 2.0) {
                return Err(Error::InvalidArgument(format!("t error degrees of freedom must exceed 2, got {df}")));
            }
        }
        if let Some(fb) = self.causal_feedback {
            if fb.from >= m || fb.to >= m {
                return Err(Error::InvalidArgument("causal feedback refers to a missing variable".into()));
            }
        }
        Ok(())
    }
}

/// The first replication of `config`.
pub fn simulate_dgp(config: &DgpConfig) -> Result<Vec<Series>> {
    simulate_replication(config, 0)
}

pub fn simulate_replication(config: &DgpConfig, replication: u64) -> Result<Vec<Series>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(replication);

    let m = config.m;
    let l = config.error_correlation.clone().cholesky().expect("validated").l();
    let chi = match config.error_tail {
        ErrorTail::StudentT(df) => Some((ChiSquared::new(df).map_err(|e| Error::InvalidArgument(e.to_string()))?, df)),
        ErrorTail::Gaussian => None,
    };

    let mut paths: Vec<Vec<f64>> = config.initial.iter().map(|&z0| {
        let mut v = Vec::with_capacity(config.t_len + 1);
        v.push(z0);
        v
    }).collect();
    let mut previous = DVector::<f64>::zeros(m);
    for t in 1..=config.t_len {
        let u = DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut e = &l * u;
        if let Some((dist, df)) = &chi {
            let w: f64 = dist.sample(&mut rng);
            e *= ((df - 2.0) / w).sqrt();
        }
        for i in 0..m {
            let mut step = config.drift[i] + config.trend[i] * t as f64 + e[i];
            if let Some(fb) = config.causal_feedback.filter(|fb| fb.to == i && t > 1) {
                let lagged = previous[fb.from];
                let signed = match fb.sign {
                    Sign::Positive => lagged.max(0.0),
                    Sign::Negative => lagged.min(0.0),
                };
                step += fb.coefficient * signed;
            }
            let last = *paths[i].last().expect("seeded with Z_0");
            paths[i].push(last + step);
        }
        previous = e;
    }
    paths
        .into_iter()
        .enumerate()
        .map(|(i, p)| Series::new(format!("z{}", i + 1), p))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionRate {
    pub hypothesis: HypothesisId,
    pub rate: f64,
    pub rejections: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeStudy {
    pub reps: usize,
    pub level: f64,
    /// Replications whose pipeline failed; excluded from the rates.
    pub failures: usize,
    pub rates: Vec<RejectionRate>,
}

impl SizeStudy {
    pub fn rate(&self, id: HypothesisId) -> f64 {
        self.rates.iter().find(|r| r.hypothesis == id).map_or(f64::NAN, |r| r.rate)
    }
}

/// Fraction of replications rejecting each hypothesis at `level`.
///
/// With `causal_feedback` unset this is the empirical size; with feedback it
/// measures power against the injected alternative.
pub fn empirical_size(config: &DgpConfig, reps: usize, level: f64, options: &PipelineOptions) -> Result<SizeStudy> {
    config.validate()?;
    if reps == 0 {
        return Err(Error::InvalidArgument("at least one replication is required".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!("level must lie in (0, 1), got {level}")));
    }
    let outcomes: Vec<Option<[bool; 10]>> = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let series = simulate_replication(config, r).ok()?;
            let analysis = analyze(&series, options).ok()?;
            let mut rejected = [false; 10];
            for res in &analysis.results {
                rejected[res.hypothesis.id.index()] = res.p_value < level;
            }
            Some(rejected)
        })
        .collect();
    let ok: Vec<[bool; 10]> = outcomes.iter().flatten().copied().collect();
    if ok.is_empty() {
        return Err(Error::Degenerate("every Monte Carlo replication failed".into()));
    }
    let rates = HypothesisId::ALL
        .iter()
        .map(|&id| {
            let rejections = ok.iter().filter(|r| r[id.index()]).count();
            RejectionRate { hypothesis: id, rate: rejections as f64 / ok.len() as f64, rejections }
        })
        .collect();
    Ok(SizeStudy { reps, level, failures: reps - ok.len(), rates })
}
