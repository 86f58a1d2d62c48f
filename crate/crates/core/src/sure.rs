//! Block autoregressive SURE system for signed components.
//!
//! With `m` variables the system has `n = 2m` equations ordered
//! `[Z⁺_1 … Z⁺_m, Z⁻_1 … Z⁻_m]`. Positive equations regress on lags of the
//! positive components only; negative equations on lags of the negative
//! components only. Every equation carries an intercept. Lags `1..=P` are
//! subject to testing; `extra_lags` further lags are appended unrestricted
//! (Toda–Yamamoto augmentation).
//!
//! Coefficient names follow the row convention of the two-variable system:
//! the equation of variable 1 uses `beta`, that of variable 2 uses `gamma`
//! (and `phi<i>` beyond), so `beta+[2,1]` is the first lag of `Z⁺_2` in the
//! `Z⁺_1` equation and `lambda-[1]` the intercept of the `Z⁻_1` equation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::decomposition::SignedComponents;
use crate::error::{Error, Result};

pub const DEFAULT_FGLS_TOL: f64 = 1e-8;
pub const DEFAULT_FGLS_MAX_ITER: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn symbol(self) -> char {
        match self {
            Sign::Positive => '+',
            Sign::Negative => '-',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regressor {
    Intercept,
    /// Lag `lag` of the `sign` component of variable `variable` (0-based).
    Lag { variable: usize, sign: Sign, lag: usize },
    /// Column of a user-supplied design matrix.
    Exogenous { column: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientEntry {
    pub name: String,
    pub regressor: Regressor,
    /// Whether hypotheses may restrict this coefficient.
    pub restricted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquationLayout {
    pub name: String,
    pub sign: Option<Sign>,
    pub variable: Option<usize>,
    /// Position of the first coefficient of this equation in the stacked vector.
    pub offset: usize,
    pub entries: Vec<CoefficientEntry>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Layout {
    pub variables: Vec<String>,
    pub equations: Vec<EquationLayout>,
}

impl Layout {
    /// Total number of stacked coefficients.
    pub fn len(&self) -> usize {
        self.equations.iter().map(|e| e.entries.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.equations.iter().flat_map(|e| e.entries.iter().map(|c| c.name.as_str()))
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.names().position(|n| n == name)
    }

    pub fn equation(&self, variable: usize, sign: Sign) -> Option<&EquationLayout> {
        self.equations.iter().find(|e| e.variable == Some(variable) && e.sign == Some(sign))
    }

    /// Stacked positions of the lag coefficients of `regressor_var` in the
    /// `(equation_var, sign)` equation, restricted lags only, ordered by lag.
    pub fn restricted_lags(&self, equation_var: usize, sign: Sign, regressor_var: usize) -> Vec<usize> {
        let Some(eq) = self.equation(equation_var, sign) else {
            return Vec::new();
        };
        let mut found: Vec<(usize, usize)> = eq
            .entries
            .iter()
            .enumerate()
            .filter_map(|(i, c)| match c.regressor {
                Regressor::Lag { variable, lag, .. } if variable == regressor_var && c.restricted => {
                    Some((lag, eq.offset + i))
                }
                _ => None,
            })
            .collect();
        found.sort_unstable();
        found.into_iter().map(|(_, pos)| pos).collect()
    }

    pub fn entry(&self, position: usize) -> Option<&CoefficientEntry> {
        self.equations.iter().flat_map(|e| e.entries.iter()).nth(position)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equation {
    pub regressand: DVector<f64>,
    pub design: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SureSystem {
    pub equations: Vec<Equation>,
    pub layout: Layout,
    /// `(P⁺, P⁻)`; zero for systems not built from components.
    pub lag_orders: (usize, usize),
    pub extra_lags: usize,
    pub effective_sample: usize,
    /// Observation index of the first row of every design matrix.
    pub sample_start: usize,
}

impl SureSystem {
    /// Generic system from `(name, y, X)` triples sharing the same row count.
    pub fn from_equations(equations: Vec<(String, DVector<f64>, DMatrix<f64>)>) -> Result<Self> {
        let Some(rows) = equations.first().map(|(_, y, _)| y.len()) else {
            return Err(Error::InvalidArgument("a SURE system needs at least one equation".into()));
        };
        let mut layout = Layout::default();
        let mut eqs = Vec::with_capacity(equations.len());
        let mut offset = 0;
        for (name, y, x) in equations {
            if y.len() != rows || x.nrows() != rows {
                return Err(Error::LengthMismatch(format!(
                    "equation `{name}` has {} observations and {} design rows, expected {rows}",
                    y.len(),
                    x.nrows()
                )));
            }
            if rows <= x.ncols() {
                return Err(Error::InsufficientObservations {
                    available: rows,
                    required: x.ncols(),
                    context: format!("equation `{name}`"),
                });
            }
            let entries = (0..x.ncols())
                .map(|column| CoefficientEntry {
                    name: format!("{name}[x{}]", column + 1),
                    regressor: Regressor::Exogenous { column },
                    restricted: true,
                })
                .collect::<Vec<_>>();
            let k = entries.len();
            layout.equations.push(EquationLayout { name, sign: None, variable: None, offset, entries });
            offset += k;
            eqs.push(Equation { regressand: y, design: x });
        }
        Ok(Self { equations: eqs, layout, lag_orders: (0, 0), extra_lags: 0, effective_sample: rows, sample_start: 0 })
    }

    pub fn n_equations(&self) -> usize {
        self.equations.len()
    }

    pub fn n_coefficients(&self) -> usize {
        self.equations.iter().map(|e| e.design.ncols()).sum()
    }

    /// Residuals `y_i - X_i c_i` for a stacked coefficient vector.
    pub fn residuals(&self, coefficients: &DVector<f64>) -> Vec<DVector<f64>> {
        let mut offset = 0;
        self.equations
            .iter()
            .map(|eq| {
                let k = eq.design.ncols();
                let c = coefficients.rows(offset, k);
                offset += k;
                &eq.regressand - &eq.design * c
            })
            .collect()
    }
}

fn coefficient_prefix(variable: usize) -> String {
    match variable {
        0 => "beta".to_string(),
        1 => "gamma".to_string(),
        i => format!("phi{}", i + 1),
    }
}

pub fn build_design(
    components: &[SignedComponents],
    p_pos: usize,
    p_neg: usize,
    extra_lags: usize,
) -> Result<SureSystem> {
    if components.is_empty() {
        return Err(Error::InvalidArgument("no components supplied".into()));
    }
    if p_pos == 0 || p_neg == 0 {
        return Err(Error::InvalidArgument(format!("lag orders must be at least 1, got ({p_pos}, {p_neg})")));
    }
    let len = components[0].len();
    if let Some(c) = components.iter().find(|c| c.len() != len) {
        return Err(Error::LengthMismatch(format!(
            "component `{}` has {} observations, expected {len}",
            c.name,
            c.len()
        )));
    }
    let m = components.len();
    let start = p_pos.max(p_neg) + extra_lags;
    let rows = len.saturating_sub(start);
    let widest = 1 + m * (p_pos.max(p_neg) + extra_lags);
    if rows <= widest {
        return Err(Error::InsufficientObservations {
            available: rows,
            required: widest,
            context: format!("effective sample for lags ({p_pos}, {p_neg}) + {extra_lags}"),
        });
    }

    let mut layout = Layout { variables: components.iter().map(|c| c.name.clone()).collect(), equations: Vec::new() };
    let mut equations = Vec::with_capacity(2 * m);
    let mut offset = 0;
    for sign in [Sign::Positive, Sign::Negative] {
        let p = if sign == Sign::Positive { p_pos } else { p_neg };
        let total_lags = p + extra_lags;
        let series: Vec<&[f64]> = components
            .iter()
            .map(|c| match sign {
                Sign::Positive => c.positive.as_slice(),
                Sign::Negative => c.negative.as_slice(),
            })
            .collect();
        for (i, own) in series.iter().enumerate() {
            let s = sign.symbol();
            let prefix = coefficient_prefix(i);
            let mut entries = vec![CoefficientEntry {
                name: format!("lambda{s}[{}]", i + 1),
                regressor: Regressor::Intercept,
                restricted: false,
            }];
            for j in 0..m {
                for lag in 1..=total_lags {
                    entries.push(CoefficientEntry {
                        name: format!("{prefix}{s}[{},{lag}]", j + 1),
                        regressor: Regressor::Lag { variable: j, sign, lag },
                        restricted: lag <= p,
                    });
                }
            }
            let k = entries.len();
            let design = DMatrix::from_fn(rows, k, |r, col| {
                let t = start + r;
                match entries[col].regressor {
                    Regressor::Lag { variable, lag, .. } => series[variable][t - lag],
                    _ => 1.0,
                }
            });
            let regressand = DVector::from_iterator(rows, own[start..].iter().copied());
            layout.equations.push(EquationLayout {
                name: format!("{}{s}", components[i].name),
                sign: Some(sign),
                variable: Some(i),
                offset,
                entries,
            });
            offset += k;
            equations.push(Equation { regressand, design });
        }
    }

    Ok(SureSystem {
        equations,
        layout,
        lag_orders: (p_pos, p_neg),
        extra_lags,
        effective_sample: rows,
        sample_start: start,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Aic,
    #[default]
    Sbc,
    Hq,
}

impl std::str::FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "aic" => Ok(Self::Aic),
            "sbc" | "bic" | "sic" => Ok(Self::Sbc),
            "hq" | "hqc" => Ok(Self::Hq),
            other => Err(Error::InvalidArgument(format!("unknown information criterion `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagCandidate {
    pub lag: usize,
    pub positive: f64,
    pub negative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagSelection {
    pub positive: usize,
    pub negative: usize,
    pub criterion: Criterion,
    pub trace: Vec<LagCandidate>,
}

/// Chooses `(P⁺, P⁻)` independently for each sign block by minimizing an
/// information criterion over `1..=p_max` on a common sample.
pub fn select_lags(components: &[SignedComponents], p_max: usize, criterion: Criterion) -> Result<LagSelection> {
    if p_max == 0 {
        return Err(Error::InvalidArgument("p_max must be at least 1".into()));
    }
    if components.is_empty() {
        return Err(Error::InvalidArgument("no components supplied".into()));
    }
    let pos: Vec<&[f64]> = components.iter().map(|c| c.positive.as_slice()).collect();
    let neg: Vec<&[f64]> = components.iter().map(|c| c.negative.as_slice()).collect();
    let mut trace = Vec::with_capacity(p_max);
    for lag in 1..=p_max {
        trace.push(LagCandidate {
            lag,
            positive: block_criterion(&pos, lag, p_max, criterion)?,
            negative: block_criterion(&neg, lag, p_max, criterion)?,
        });
    }
    let argmin = |f: fn(&LagCandidate) -> f64| {
        trace.iter().fold((0usize, f64::INFINITY), |best, c| if f(c) < best.1 { (c.lag, f(c)) } else { best }).0
    };
    Ok(LagSelection {
        positive: argmin(|c| c.positive),
        negative: argmin(|c| c.negative),
        criterion,
        trace,
    })
}

/// Information criterion of a VAR(`lag`) with intercept fitted by OLS to
/// `block`, using the sample that starts at `p_max`.
pub fn block_criterion(block: &[&[f64]], lag: usize, p_max: usize, criterion: Criterion) -> Result<f64> {
    let m = block.len();
    let len = block[0].len();
    if block.iter().any(|s| s.len() != len) {
        return Err(Error::LengthMismatch("lag-selection block series differ in length".into()));
    }
    let rows = len.saturating_sub(p_max);
    let k = 1 + m * p_max;
    if rows <= k {
        return Err(Error::InsufficientObservations {
            available: rows,
            required: k,
            context: format!("lag selection with p_max = {p_max}"),
        });
    }
    let x = DMatrix::from_fn(rows, 1 + m * lag, |r, col| {
        if col == 0 {
            1.0
        } else {
            let (j, l) = ((col - 1) / lag, (col - 1) % lag + 1);
            block[j][p_max + r - l]
        }
    });
    let y = DMatrix::from_fn(rows, m, |r, j| block[j][p_max + r]);
    let coef = least_squares(&x, &y, "lag-selection VAR")?;
    let resid = &y - &x * coef;
    let sigma = resid.transpose() * &resid / rows as f64;
    let chol = sigma
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite(format!("residual covariance of the VAR({lag}) block")))?;
    let log_det: f64 = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let t = rows as f64;
    let params = (m * m * lag) as f64;
    let penalty = match criterion {
        Criterion::Aic => 2.0 * params / t,
        Criterion::Sbc => params * t.ln() / t,
        Criterion::Hq => 2.0 * params * t.ln().ln() / t,
    };
    Ok(log_det + penalty)
}

/// Rank-checked least squares via SVD; `y` may have several columns.
pub(crate) fn least_squares(x: &DMatrix<f64>, y: &DMatrix<f64>, context: &str) -> Result<DMatrix<f64>> {
    let svd = x.clone().svd(true, true);
    check_rank(&svd.singular_values, x.nrows().max(x.ncols()), context)?;
    svd.solve(y, 0.0).map_err(|_| Error::Singular(context.to_string()))
}

fn check_rank(singular_values: &DVector<f64>, dim: usize, context: &str) -> Result<()> {
    let max = singular_values.max();
    let tol = max * dim as f64 * f64::EPSILON;
    if max == 0.0 || singular_values.iter().any(|&s| s <= tol) {
        return Err(Error::Singular(format!("design of {context} is rank-deficient")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Ols,
    Fgls,
    GarchTMl,
}

impl std::fmt::Display for Estimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Estimator::Ols => "ols",
            Estimator::Fgls => "fgls",
            Estimator::GarchTMl => "garch_t_ml",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientEstimate {
    pub coefficients: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub omega: DMatrix<f64>,
    pub residuals: Vec<DVector<f64>>,
    pub estimator: Estimator,
    pub iterations: usize,
    pub converged: bool,
}

impl CoefficientEstimate {
    pub fn std_errors(&self) -> DVector<f64> {
        self.covariance.diagonal().map(|v| v.max(0.0).sqrt())
    }
}

/// Residual cross-moment matrix with divisor `T_eff`.
pub fn residual_covariance(residuals: &[DVector<f64>]) -> DMatrix<f64> {
    let n = residuals.len();
    let t = residuals[0].len() as f64;
    DMatrix::from_fn(n, n, |i, j| residuals[i].dot(&residuals[j]) / t)
}

/// Equation-by-equation least squares.
pub fn ols_fit(system: &SureSystem) -> Result<CoefficientEstimate> {
    let k_total = system.n_coefficients();
    let mut coefficients = DVector::zeros(k_total);
    let mut xtx_inv = Vec::with_capacity(system.n_equations());
    let mut offset = 0;
    for (eq, lay) in system.equations.iter().zip(&system.layout.equations) {
        let k = eq.design.ncols();
        let svd = eq.design.clone().svd(true, true);
        check_rank(&svd.singular_values, eq.design.nrows().max(k), &format!("equation `{}`", lay.name))?;
        let b = svd
            .solve(&eq.regressand, 0.0)
            .map_err(|_| Error::Singular(format!("equation `{}`", lay.name)))?;
        coefficients.rows_mut(offset, k).copy_from(&b);
        let v_t = svd.v_t.as_ref().expect("SVD computed with V");
        let inv_sq = DMatrix::from_diagonal(&svd.singular_values.map(|s| 1.0 / (s * s)));
        xtx_inv.push(v_t.transpose() * inv_sq * v_t);
        offset += k;
    }
    let residuals = system.residuals(&coefficients);
    let omega = residual_covariance(&residuals);
    let mut covariance = DMatrix::zeros(k_total, k_total);
    let mut offset = 0;
    for (i, block) in xtx_inv.iter().enumerate() {
        let k = block.nrows();
        covariance.view_mut((offset, offset), (k, k)).copy_from(&(block * omega[(i, i)]));
        offset += k;
    }
    Ok(CoefficientEstimate {
        coefficients,
        covariance,
        omega,
        residuals,
        estimator: Estimator::Ols,
        iterations: 0,
        converged: true,
    })
}

/// Cross products `X_i'X_j` and `X_i'y_j`, reused across GLS iterations.
struct CrossProducts {
    xx: Vec<Vec<DMatrix<f64>>>,
    xy: Vec<Vec<DVector<f64>>>,
    offsets: Vec<usize>,
    total: usize,
}

impl CrossProducts {
    fn new(system: &SureSystem) -> Self {
        let eqs = &system.equations;
        let xx = eqs.iter().map(|a| eqs.iter().map(|b| a.design.tr_mul(&b.design)).collect()).collect();
        let xy = eqs.iter().map(|a| eqs.iter().map(|b| a.design.tr_mul(&b.regressand)).collect()).collect();
        let mut offsets = Vec::with_capacity(eqs.len());
        let mut total = 0;
        for eq in eqs {
            offsets.push(total);
            total += eq.design.ncols();
        }
        Self { xx, xy, offsets, total }
    }

    /// Solves `[Z'(Ω⁻¹⊗I)Z] c = Z'(Ω⁻¹⊗I)X`, returning `c` and the inverse
    /// of the normal matrix.
    fn solve(&self, omega_inv: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let n = self.offsets.len();
        let mut a = DMatrix::zeros(self.total, self.total);
        let mut b = DVector::zeros(self.total);
        for i in 0..n {
            let (oi, ki) = (self.offsets[i], self.xx[i][i].nrows());
            let mut bi = DVector::zeros(ki);
            for j in 0..n {
                let w = omega_inv[(i, j)];
                let oj = self.offsets[j];
                let kj = self.xx[j][j].nrows();
                a.view_mut((oi, oj), (ki, kj)).copy_from(&(&self.xx[i][j] * w));
                bi += &self.xy[i][j] * w;
            }
            b.rows_mut(oi, ki).copy_from(&bi);
        }
        // Jacobi scaling before the factorization
        let scale = a.diagonal().map(|d| if d > 0.0 { 1.0 / d.sqrt() } else { 1.0 });
        let scaled = DMatrix::from_fn(self.total, self.total, |r, c| a[(r, c)] * scale[r] * scale[c]);
        let chol = scaled.cholesky().ok_or_else(|| Error::Singular("stacked GLS normal equations".into()))?;
        let rhs = b.component_mul(&scale);
        let c = chol.solve(&rhs).component_mul(&scale);
        let inv_scaled = chol.inverse();
        let inv = DMatrix::from_fn(self.total, self.total, |r, col| inv_scaled[(r, col)] * scale[r] * scale[col]);
        Ok((c, symmetrize(inv)))
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

pub(crate) fn invert_spd(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let chol = m.clone().cholesky().ok_or_else(|| Error::NotPositiveDefinite(what.to_string()))?;
    Ok(symmetrize(chol.inverse()))
}

/// One GLS step with a fixed residual covariance `omega`.
pub fn gls_fit(system: &SureSystem, omega: &DMatrix<f64>) -> Result<CoefficientEstimate> {
    let n = system.n_equations();
    if omega.shape() != (n, n) {
        return Err(Error::LengthMismatch(format!("omega is {:?}, system has {n} equations", omega.shape())));
    }
    let cross = CrossProducts::new(system);
    let omega_inv = invert_spd(omega, "supplied residual covariance")?;
    let (coefficients, covariance) = cross.solve(&omega_inv)?;
    let residuals = system.residuals(&coefficients);
    Ok(CoefficientEstimate {
        coefficients,
        covariance,
        omega: omega.clone(),
        residuals,
        estimator: Estimator::Fgls,
        iterations: 1,
        converged: true,
    })
}

/// Iterated feasible GLS starting from OLS residuals.
pub fn fgls_fit(system: &SureSystem, tol: f64, max_iter: usize) -> Result<CoefficientEstimate> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("FGLS tolerance must be positive, got {tol}")));
    }
    let ols = ols_fit(system)?;
    let cross = CrossProducts::new(system);
    let mut coefficients = ols.coefficients;
    let mut omega = ols.omega;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter.max(1) {
        let omega_inv = invert_spd(&omega, "FGLS residual covariance")?;
        let (next, _) = cross.solve(&omega_inv)?;
        iterations += 1;
        let change = (&next - &coefficients).amax();
        coefficients = next;
        omega = residual_covariance(&system.residuals(&coefficients));
        if change < tol {
            converged = true;
            break;
        }
    }
    let omega_inv = invert_spd(&omega, "FGLS residual covariance")?;
    let (_, covariance) = cross.solve(&omega_inv)?;
    let residuals = system.residuals(&coefficients);
    Ok(CoefficientEstimate {
        coefficients,
        covariance,
        omega,
        residuals,
        estimator: Estimator::Fgls,
        iterations,
        converged,
    })
}
