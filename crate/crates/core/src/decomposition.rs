//! Positive and negative partial cumulative sums of an integrated series.
//!
//! A series `Z_t = a + b t + Z_{t-1} + e_t` is written as `Z_t = Z⁺_t + Z⁻_t`
//! where each component carries half of the deterministic path plus the
//! running sum of only the positive (resp. negative) innovations:
//!
//! ```text
//! Z⁺_t = (a t + b t(t+1)/2 + Z_0) / 2 + Σ_{j≤t} max(e_j, 0)
//! Z⁻_t = (a t + b t(t+1)/2 + Z_0) / 2 + Σ_{j≤t} min(e_j, 0)
//! ```
//!
//! Index 0 is the first observation; both components equal `Z_0 / 2` there.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum number of observations: two increments are needed for any fit.
pub const MIN_SERIES_LEN: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    name: String,
    values: Vec<f64>,
    timestamps: Option<Vec<String>>,
}

impl Series {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if values.len() < MIN_SERIES_LEN {
            return Err(Error::SeriesTooShort { name, len: values.len(), min: MIN_SERIES_LEN });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { name, index });
        }
        Ok(Self { name, values, timestamps: None })
    }

    pub fn with_timestamps(mut self, timestamps: Vec<String>) -> Result<Self> {
        if timestamps.len() != self.values.len() {
            return Err(Error::LengthMismatch(format!(
                "series `{}` has {} values but {} timestamps",
                self.name,
                self.values.len(),
                timestamps.len()
            )));
        }
        self.timestamps = Some(timestamps);
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn timestamps(&self) -> Option<&[String]> {
        self.timestamps.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Natural logarithm of every value; fails on non-positive levels.
    pub fn ln(&self) -> Result<Self> {
        if let Some(index) = self.values.iter().position(|&v| v <= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "cannot take the log of series `{}`: value {} at index {index} is not positive",
                self.name, self.values[index]
            )));
        }
        Ok(Self {
            name: self.name.clone(),
            values: self.values.iter().map(|v| v.ln()).collect(),
            timestamps: self.timestamps.clone(),
        })
    }
}

/// Deterministic part assumed for the increments of a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeterministicSpec {
    None,
    #[default]
    Drift,
    DriftAndTrend,
}

impl std::str::FromStr for DeterministicSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "drift" => Ok(Self::Drift),
            "drift_and_trend" | "drift-and-trend" | "trend" => Ok(Self::DriftAndTrend),
            other => Err(Error::InvalidArgument(format!("unknown deterministic spec `{other}`"))),
        }
    }
}

/// Flags a component whose innovations are all zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentWarning {
    NoPositiveInnovations,
    NoNegativeInnovations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignedComponents {
    pub name: String,
    pub positive: Vec<f64>,
    pub negative: Vec<f64>,
    /// `e⁺_t`, aligned with the increments (index `t - 1` holds `e⁺_t`).
    pub innovations_pos: Vec<f64>,
    /// `e⁻_t`, aligned like `innovations_pos`.
    pub innovations_neg: Vec<f64>,
    pub fitted_drift: f64,
    pub fitted_trend: f64,
    pub initial_value: f64,
    pub timestamps: Option<Vec<String>>,
    pub warnings: Vec<ComponentWarning>,
}

impl SignedComponents {
    pub fn len(&self) -> usize {
        self.positive.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positive.is_empty()
    }

    /// Half of the deterministic path at index `t`.
    pub fn deterministic_half(&self, t: usize) -> f64 {
        deterministic_half(self.fitted_drift, self.fitted_trend, self.initial_value, t)
    }
}

fn deterministic_half(drift: f64, trend: f64, initial: f64, t: usize) -> f64 {
    let tf = t as f64;
    // t(t+1)/2 is an integer, so the floor in the component formula is a no-op
    let tri = (t * (t + 1) / 2) as f64;
    (drift * tf + tri * trend + initial) / 2.0
}

/// Least-squares fit of the increments on the deterministic regressors.
///
/// Returns `(drift, trend)`; the trend is zero unless `spec` includes it.
pub fn fit_deterministic(series: &Series, spec: DeterministicSpec) -> Result<(f64, f64)> {
    let values = series.values();
    let diffs: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let n = diffs.len() as f64;
    match spec {
        DeterministicSpec::None => Ok((0.0, 0.0)),
        DeterministicSpec::Drift => Ok((diffs.iter().sum::<f64>() / n, 0.0)),
        DeterministicSpec::DriftAndTrend => {
            if values.iter().all(|&v| v == values[0]) {
                return Err(Error::Degenerate(format!(
                    "series `{}` is constant; a drift-and-trend fit is rank-deficient",
                    series.name()
                )));
            }
            // increments are indexed t = 1..T
            let t_mean = (1..=diffs.len()).map(|t| t as f64).sum::<f64>() / n;
            let d_mean = diffs.iter().sum::<f64>() / n;
            let mut sxx = 0.0;
            let mut sxy = 0.0;
            for (i, d) in diffs.iter().enumerate() {
                let dt = (i + 1) as f64 - t_mean;
                sxx += dt * dt;
                sxy += dt * (d - d_mean);
            }
            let trend = sxy / sxx;
            Ok((d_mean - trend * t_mean, trend))
        }
    }
}

pub fn decompose(series: &Series, spec: DeterministicSpec) -> Result<SignedComponents> {
    let (drift, trend) = fit_deterministic(series, spec)?;
    let values = series.values();
    let initial = values[0];

    let mut innovations_pos = Vec::with_capacity(values.len() - 1);
    let mut innovations_neg = Vec::with_capacity(values.len() - 1);
    for (i, w) in values.windows(2).enumerate() {
        let t = (i + 1) as f64;
        let e = w[1] - w[0] - drift - trend * t;
        innovations_pos.push(e.max(0.0));
        innovations_neg.push(e.min(0.0));
    }

    let mut positive = Vec::with_capacity(values.len());
    let mut negative = Vec::with_capacity(values.len());
    let (mut cum_pos, mut cum_neg) = (0.0, 0.0);
    for t in 0..values.len() {
        if t > 0 {
            cum_pos += innovations_pos[t - 1];
            cum_neg += innovations_neg[t - 1];
        }
        let half = deterministic_half(drift, trend, initial, t);
        positive.push(half + cum_pos);
        negative.push(half + cum_neg);
    }

    let mut warnings = Vec::new();
    if innovations_pos.iter().all(|&e| e == 0.0) {
        warnings.push(ComponentWarning::NoPositiveInnovations);
    }
    if innovations_neg.iter().all(|&e| e == 0.0) {
        warnings.push(ComponentWarning::NoNegativeInnovations);
    }

    Ok(SignedComponents {
        name: series.name().to_string(),
        positive,
        negative,
        innovations_pos,
        innovations_neg,
        fitted_drift: drift,
        fitted_trend: trend,
        initial_value: initial,
        timestamps: series.timestamps().map(<[String]>::to_vec),
        warnings,
    })
}

/// Elementwise `positive + negative`, which reproduces the original levels.
pub fn recompose(components: &SignedComponents) -> Result<Vec<f64>> {
    if components.positive.len() != components.negative.len() {
        return Err(Error::LengthMismatch(format!(
            "positive component has {} values, negative has {}",
            components.positive.len(),
            components.negative.len()
        )));
    }
    Ok(components.positive.iter().zip(&components.negative).map(|(p, n)| p + n).collect())
}
