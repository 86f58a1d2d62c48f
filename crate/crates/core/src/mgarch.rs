//! SURE mean system with CCC-GARCH(1,1) conditional variances and
//! multivariate t innovations, estimated jointly by maximum likelihood.
//!
//! ```text
//! ε_t = y_t − X_t c
//! h_{i,t} = ω_i + α_i ε²_{i,t−1} + β_i h_{i,t−1}
//! H_t = D_t R D_t,  D_t = diag(√h_{1,t} … √h_{n,t})
//! ε_t | past ~ t_ν(0, H_t)   (covariance-scaled, ν > 2)
//! ```
//!
//! The recursion starts from `ε²_{i,0} = h_{i,0} = (1/T) Σ_t ε²_{i,t}`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{self, BfgsOptions};
use crate::special::ln_gamma;
use crate::sure::{self, fgls_fit, least_squares, residual_covariance, CoefficientEstimate, Estimator, SureSystem};
use crate::wald::chisq_sf;

/// Multivariate GARCH family. Only constant conditional correlation is
/// implemented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MgarchVariant {
    #[default]
    Ccc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GarchSpec {
    pub omega: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub correlation: DMatrix<f64>,
    pub nu: f64,
}

impl GarchSpec {
    pub fn n(&self) -> usize {
        self.omega.len()
    }

    /// Same GARCH(1,1) parameters in every equation.
    pub fn uniform(n: usize, omega: f64, alpha: f64, beta: f64, correlation: DMatrix<f64>, nu: f64) -> Self {
        Self { omega: vec![omega; n], alpha: vec![alpha; n], beta: vec![beta; n], correlation, nu }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if self.alpha.len() != n || self.beta.len() != n || self.correlation.shape() != (n, n) {
            return Err(Error::LengthMismatch(format!("GARCH spec dimensions disagree (n = {n})")));
        }
        for i in 0..n {
            let (w, a, b) = (self.omega[i], self.alpha[i], self.beta[i]);
            if !(w > 0.0) || !(0.0..1.0).contains(&a) || !(0.0..1.0).contains(&b) || a + b >= 1.0 {
                return Err(Error::InvalidArgument(format!(
                    "equation {i}: need omega > 0, alpha, beta in [0,1), alpha + beta < 1; got ({w}, {a}, {b})"
                )));
            }
        }
        if !(self.nu > 2.0) {
            return Err(Error::InvalidArgument(format!("t degrees of freedom must exceed 2, got {}", self.nu)));
        }
        let r = &self.correlation;
        for i in 0..n {
            if (r[(i, i)] - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidArgument("correlation matrix must have a unit diagonal".into()));
            }
            for j in 0..i {
                if (r[(i, j)] - r[(j, i)]).abs() > 1e-10 {
                    return Err(Error::InvalidArgument("correlation matrix must be symmetric".into()));
                }
            }
        }
        if r.clone().cholesky().is_none() {
            return Err(Error::NotPositiveDefinite("GARCH correlation matrix".into()));
        }
        Ok(())
    }

    /// Number of free GARCH parameters: three per equation, the
    /// off-diagonal correlations and ν.
    pub fn n_params(n: usize) -> usize {
        3 * n + n * (n - 1) / 2 + 1
    }
}

/// Log-likelihood of the mean system given residual series.
fn loglik_residuals(residuals: &[DVector<f64>], spec: &GarchSpec) -> Option<f64> {
    let n = residuals.len();
    let t_len = residuals[0].len();
    let chol = spec.correlation.clone().cholesky()?;
    let l_inv = chol.l().try_inverse()?;
    let log_det_r = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let nu = spec.nu;
    let nf = n as f64;
    let constant =
        ln_gamma((nu + nf) / 2.0) - ln_gamma(nu / 2.0) - nf / 2.0 * (std::f64::consts::PI * (nu - 2.0)).ln() - 0.5 * log_det_r;

    let mut h: Vec<f64> = residuals.iter().map(|e| e.norm_squared() / t_len as f64).collect();
    let mut prev_sq = h.clone();
    let mut z = DVector::zeros(n);
    let mut total = constant * t_len as f64;
    for t in 0..t_len {
        let mut log_h = 0.0;
        for i in 0..n {
            h[i] = spec.omega[i] + spec.alpha[i] * prev_sq[i] + spec.beta[i] * h[i];
            if !(h[i] > 0.0) {
                return None;
            }
            let e = residuals[i][t];
            z[i] = e / h[i].sqrt();
            log_h += h[i].ln();
            prev_sq[i] = e * e;
        }
        let w = &l_inv * &z;
        let q = w.norm_squared();
        total += -0.5 * log_h - 0.5 * (nu + nf) * (q / (nu - 2.0)).ln_1p();
    }
    total.is_finite().then_some(total)
}

/// Log-likelihood of `system` at mean coefficients `coefficients` and GARCH
/// parameters `spec`.
pub fn garch_t_loglik(coefficients: &DVector<f64>, spec: &GarchSpec, system: &SureSystem) -> Result<f64> {
    if coefficients.len() != system.n_coefficients() || spec.n() != system.n_equations() {
        return Err(Error::LengthMismatch(format!(
            "{} coefficients / {} GARCH equations for a system with {} coefficients in {} equations",
            coefficients.len(),
            spec.n(),
            system.n_coefficients(),
            system.n_equations()
        )));
    }
    spec.validate()?;
    loglik_residuals(&system.residuals(coefficients), spec)
        .ok_or_else(|| Error::NonFiniteLikelihood("conditional variance or density overflowed".into()))
}

/// Maps constrained parameters to an unconstrained vector:
/// `[c, (ln ω_i, ln(α_i/κ_i), ln(β_i/κ_i))_i, atanh(partial correlations), ln(ν − 2)]`
/// with `κ_i = 1 − α_i − β_i`. Requires `α_i, β_i > 0`.
pub fn to_unconstrained(coefficients: &DVector<f64>, spec: &GarchSpec) -> Result<DVector<f64>> {
    spec.validate()?;
    let n = spec.n();
    let k = coefficients.len();
    let mut theta = Vec::with_capacity(k + GarchSpec::n_params(n));
    theta.extend(coefficients.iter().copied());
    for i in 0..n {
        let (a, b) = (spec.alpha[i], spec.beta[i]);
        if a <= 0.0 || b <= 0.0 {
            return Err(Error::InvalidArgument("alpha and beta must be strictly positive to transform".into()));
        }
        let rest = 1.0 - a - b;
        theta.push(spec.omega[i].ln());
        theta.push((a / rest).ln());
        theta.push((b / rest).ln());
    }
    let l = spec.correlation.clone().cholesky().ok_or_else(|| Error::NotPositiveDefinite("correlation".into()))?.l();
    for i in 1..n {
        let mut remaining: f64 = 1.0;
        for j in 0..i {
            let z = l[(i, j)] / remaining.sqrt();
            theta.push(z.clamp(-1.0 + 1e-16, 1.0 - 1e-16).atanh());
            remaining -= l[(i, j)] * l[(i, j)];
        }
    }
    theta.push((spec.nu - 2.0).ln());
    Ok(DVector::from_vec(theta))
}

/// Inverse of [`to_unconstrained`]; `k` is the number of mean coefficients.
pub fn from_unconstrained(theta: &DVector<f64>, k: usize, n: usize) -> (DVector<f64>, GarchSpec) {
    let coefficients = DVector::from_iterator(k, theta.iter().take(k).copied());
    let mut pos = k;
    let mut omega = Vec::with_capacity(n);
    let mut alpha = Vec::with_capacity(n);
    let mut beta = Vec::with_capacity(n);
    for _ in 0..n {
        let (lw, la, lb) = (theta[pos], theta[pos + 1], theta[pos + 2]);
        pos += 3;
        omega.push(lw.exp());
        // softmax with a fixed zero logit for the remainder
        let top = la.max(lb).max(0.0);
        let (ea, eb, e0) = ((la - top).exp(), (lb - top).exp(), (-top).exp());
        let denom = ea + eb + e0;
        alpha.push(ea / denom);
        beta.push(eb / denom);
    }
    let mut l = DMatrix::zeros(n, n);
    l[(0, 0)] = 1.0;
    for i in 1..n {
        let mut remaining: f64 = 1.0;
        for j in 0..i {
            let z = theta[pos].tanh();
            pos += 1;
            l[(i, j)] = z * remaining.sqrt();
            remaining -= l[(i, j)] * l[(i, j)];
        }
        l[(i, i)] = remaining.max(0.0).sqrt();
    }
    let mut correlation = &l * l.transpose();
    for i in 0..n {
        correlation[(i, i)] = 1.0;
    }
    let nu = 2.0 + theta[pos].exp();
    (coefficients, GarchSpec { omega, alpha, beta, correlation, nu })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GarchFitOptions {
    pub bfgs: BfgsOptions,
    /// Relative central-difference step for the observed information.
    pub hessian_step: f64,
    pub init_alpha: f64,
    pub init_beta: f64,
    pub init_nu: f64,
    pub fgls_tol: f64,
    pub fgls_max_iter: usize,
}

impl Default for GarchFitOptions {
    fn default() -> Self {
        Self {
            bfgs: BfgsOptions::default(),
            hessian_step: 1e-4,
            init_alpha: 0.05,
            init_beta: 0.90,
            init_nu: 8.0,
            fgls_tol: sure::DEFAULT_FGLS_TOL,
            fgls_max_iter: sure::DEFAULT_FGLS_MAX_ITER,
        }
    }
}

/// Point estimate of the joint likelihood maximization, before inference.
#[derive(Debug, Clone, PartialEq)]
pub struct GarchOptimum {
    pub coefficients: DVector<f64>,
    pub garch: GarchSpec,
    pub loglik: f64,
    pub initial_loglik: f64,
    /// Unconstrained parameter vector at the optimum.
    pub theta: DVector<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Log-likelihood after every accepted optimizer step.
    pub trace: Vec<f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GarchFit {
    pub mean: CoefficientEstimate,
    pub garch: GarchSpec,
    pub loglik: f64,
    pub initial_loglik: f64,
    /// Negative Hessian of the log-likelihood over the unconstrained parameters.
    pub information: DMatrix<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub trace: Vec<f64>,
    pub warnings: Vec<String>,
}

fn starting_point(system: &SureSystem, init: Option<&CoefficientEstimate>, options: &GarchFitOptions) -> Result<(DVector<f64>, GarchSpec)> {
    let mean = match init {
        Some(est) => est.clone(),
        None => fgls_fit(system, options.fgls_tol, options.fgls_max_iter)?,
    };
    if mean.coefficients.len() != system.n_coefficients() {
        return Err(Error::LengthMismatch("initial estimate does not match the system".into()));
    }
    let omega = residual_covariance(&system.residuals(&mean.coefficients));
    let n = system.n_equations();
    let sd: Vec<f64> = (0..n).map(|i| omega[(i, i)].sqrt()).collect();
    if sd.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::Degenerate("an equation has zero residual variance".into()));
    }
    let correlation = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { omega[(i, j)] / (sd[i] * sd[j]) });
    let persistence = 1.0 - options.init_alpha - options.init_beta;
    let spec = GarchSpec {
        omega: sd.iter().map(|s| s * s * persistence).collect(),
        alpha: vec![options.init_alpha; n],
        beta: vec![options.init_beta; n],
        correlation,
        nu: options.init_nu,
    };
    Ok((mean.coefficients, spec))
}

/// Objective over the unconstrained vector; `None` where undefined.
fn objective<'a>(system: &'a SureSystem) -> impl Fn(&DVector<f64>) -> Option<f64> + 'a {
    let k = system.n_coefficients();
    let n = system.n_equations();
    move |theta: &DVector<f64>| {
        let (c, spec) = from_unconstrained(theta, k, n);
        debug_assert!(spec.validate().is_ok(), "transform produced an invalid GARCH spec: {spec:?}");
        loglik_residuals(&system.residuals(&c), &spec)
    }
}

/// Quasi-Newton maximization of [`garch_t_loglik`] without the information
/// matrix.
pub fn maximize_sure_garch_t(
    system: &SureSystem,
    init: Option<&CoefficientEstimate>,
    options: &GarchFitOptions,
) -> Result<GarchOptimum> {
    let (c0, spec0) = starting_point(system, init, options)?;
    let mut warnings = Vec::new();
    let n_params = c0.len() + GarchSpec::n_params(system.n_equations());
    if system.effective_sample < 10 * n_params {
        warnings.push(format!(
            "effective sample {} is below ten times the {} likelihood parameters",
            system.effective_sample, n_params
        ));
    }
    let theta0 = to_unconstrained(&c0, &spec0)?;
    let f = objective(system);
    let initial_loglik =
        f(&theta0).ok_or_else(|| Error::NonFiniteLikelihood("at the starting values".into()))?;
    let out = optim::maximize(&f, theta0, &options.bfgs)
        .ok_or_else(|| Error::NonFiniteLikelihood("during gradient evaluation".into()))?;
    if !out.converged {
        warnings.push(format!(
            "optimizer stopped after {} iterations without meeting the tolerance (gradient max-norm {:.3e})",
            out.iterations, out.gradient_norm
        ));
    }
    let (coefficients, garch) = from_unconstrained(&out.argmax, system.n_coefficients(), system.n_equations());
    Ok(GarchOptimum {
        coefficients,
        garch,
        loglik: out.value,
        initial_loglik,
        theta: out.argmax,
        converged: out.converged,
        iterations: out.iterations,
        trace: out.trace,
        warnings,
    })
}

/// Joint ML fit; mean coefficients start from FGLS unless `init` is given.
pub fn fit_sure_garch_t(system: &SureSystem, init: Option<&CoefficientEstimate>) -> Result<GarchFit> {
    fit_sure_garch_t_with(system, init, &GarchFitOptions::default())
}

pub fn fit_sure_garch_t_with(
    system: &SureSystem,
    init: Option<&CoefficientEstimate>,
    options: &GarchFitOptions,
) -> Result<GarchFit> {
    let opt = maximize_sure_garch_t(system, init, options)?;
    let f = objective(system);
    let hess = optim::hessian(&f, &opt.theta, options.hessian_step)
        .ok_or_else(|| Error::NonFiniteLikelihood("while differentiating at the optimum".into()))?;
    let information = -(&hess + hess.transpose()) * 0.5;
    let k = system.n_coefficients();
    let mut warnings = opt.warnings.clone();
    let covariance = match information.clone().cholesky() {
        Some(chol) => chol.inverse().view((0, 0), (k, k)).into_owned(),
        None => {
            warnings.push("variance parameters are weakly identified at the optimum; mean covariance uses a pseudo-inverse of their information block".into());
            mean_block_covariance(&information, k)?
        }
    };
    let covariance = (&covariance + covariance.transpose()) * 0.5;
    let residuals = system.residuals(&opt.coefficients);
    let omega = residual_covariance(&residuals);
    Ok(GarchFit {
        mean: CoefficientEstimate {
            coefficients: opt.coefficients,
            covariance,
            omega,
            residuals,
            estimator: Estimator::GarchTMl,
            iterations: opt.iterations,
            converged: opt.converged,
        },
        garch: opt.garch,
        loglik: opt.loglik,
        initial_loglik: opt.initial_loglik,
        information,
        converged: opt.converged,
        iterations: opt.iterations,
        trace: opt.trace,
        warnings,
    })
}

/// Mean block of the inverse information via the Schur complement, with the
/// variance-parameter block inverted on its non-null eigenspace.
fn mean_block_covariance(information: &DMatrix<f64>, k: usize) -> Result<DMatrix<f64>> {
    let n = information.nrows();
    let i_cc = information.view((0, 0), (k, k));
    let i_cv = information.view((0, k), (k, n - k));
    let eig = information.view((k, k), (n - k, n - k)).into_owned().symmetric_eigen();
    let cutoff = eig.eigenvalues.amax() * 1e-8;
    let mut pinv = DMatrix::zeros(n - k, n - k);
    for (j, &l) in eig.eigenvalues.iter().enumerate() {
        if l > cutoff {
            let v = eig.eigenvectors.column(j);
            pinv += v * v.transpose() / l;
        }
    }
    let schur = i_cc - i_cv * pinv * i_cv.transpose();
    let schur = (&schur + schur.transpose()) * 0.5;
    schur
        .cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| Error::Singular("observed information matrix of the mean coefficients at the GARCH-t optimum".into()))
}

/// Draws `t_len` innovation vectors from the CCC-GARCH(1,1)-t process,
/// starting at the unconditional variances. Returns one series per equation.
pub fn simulate_ccc_garch_t(spec: &GarchSpec, t_len: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    simulate_with_rng(spec, t_len, &mut rng)
}

pub(crate) fn simulate_with_rng<R: Rng>(spec: &GarchSpec, t_len: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    spec.validate()?;
    if t_len == 0 {
        return Err(Error::InvalidArgument("simulation length must be at least 1".into()));
    }
    let n = spec.n();
    let l = spec.correlation.clone().cholesky().expect("validated").l();
    let chi = ChiSquared::new(spec.nu).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let scale_base = spec.nu - 2.0;
    let mut h: Vec<f64> = (0..n).map(|i| spec.omega[i] / (1.0 - spec.alpha[i] - spec.beta[i])).collect();
    let mut prev_sq = h.clone();
    let mut out = vec![Vec::with_capacity(t_len); n];
    for _ in 0..t_len {
        let u = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let w: f64 = chi.sample(rng);
        let z = &l * u * (scale_base / w).sqrt();
        for i in 0..n {
            h[i] = spec.omega[i] + spec.alpha[i] * prev_sq[i] + spec.beta[i] * h[i];
            let e = h[i].sqrt() * z[i];
            prev_sq[i] = e * e;
            out[i].push(e);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArchLmResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub lags: usize,
}

/// Multivariate ARCH LM test: regresses `vech(ε_t ε_t')` on a constant and
/// `lags` of itself; `LM = ½ T n(n+1) R²`, `R² = 1 − 2/(n(n+1)) tr(Ω̂ Ω̂₀⁻¹)`,
/// with `lags · (n(n+1)/2)²` degrees of freedom.
pub fn arch_lm_diag(residuals: &[DVector<f64>], lags: usize) -> Result<ArchLmResult> {
    if lags == 0 {
        return Err(Error::InvalidArgument("ARCH LM test needs at least one lag".into()));
    }
    let n = residuals.len();
    if n == 0 {
        return Err(Error::InvalidArgument("no residual series supplied".into()));
    }
    let t_len = residuals[0].len();
    if residuals.iter().any(|r| r.len() != t_len) {
        return Err(Error::LengthMismatch("residual series differ in length".into()));
    }
    let dim = n * (n + 1) / 2;
    let rows = t_len.saturating_sub(lags);
    let width = 1 + lags * dim;
    if rows <= width {
        return Err(Error::InsufficientObservations {
            available: rows,
            required: width,
            context: format!("ARCH LM regression with {lags} lags"),
        });
    }
    let vech = DMatrix::from_fn(t_len, dim, |t, col| {
        let (i, j) = vech_index(col);
        residuals[i][t] * residuals[j][t]
    });
    let y = vech.rows(lags, rows).into_owned();
    let x = DMatrix::from_fn(rows, width, |r, col| {
        if col == 0 {
            1.0
        } else {
            let (lag, c) = ((col - 1) / dim + 1, (col - 1) % dim);
            vech[(lags + r - lag, c)]
        }
    });
    let mean = y.row_mean();
    let centered = DMatrix::from_fn(rows, dim, |r, c| y[(r, c)] - mean[c]);
    let omega0 = centered.tr_mul(&centered) / rows as f64;
    let omega0_inv = sure::invert_spd(&omega0, "ARCH LM null covariance")
        .map_err(|_| Error::Degenerate("squared residuals do not vary; ARCH regression is degenerate".into()))?;
    let coef = least_squares(&x, &y, "ARCH LM regression")?;
    let resid = &y - &x * coef;
    let omega = resid.tr_mul(&resid) / rows as f64;
    let r2 = 1.0 - 2.0 / (n * (n + 1)) as f64 * (omega * omega0_inv).trace();
    let statistic = (0.5 * rows as f64 * (n * (n + 1)) as f64 * r2).max(0.0);
    let dof = lags * dim * dim;
    Ok(ArchLmResult { statistic, dof, p_value: chisq_sf(statistic, dof), lags })
}

/// Row-major position in the lower triangle: (0,0), (1,0), (1,1), (2,0), ...
fn vech_index(pos: usize) -> (usize, usize) {
    let mut row = 0;
    while (row + 1) * (row + 2) / 2 <= pos {
        row += 1;
    }
    (row, pos - row * (row + 1) / 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn corr2(rho: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0])
    }

    fn intercept_system(series: &[Vec<f64>]) -> SureSystem {
        let eqs = series
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let t = s.len();
                (format!("y{}", i + 1), DVector::from_vec(s.clone()), DMatrix::from_element(t, 1, 1.0))
            })
            .collect();
        SureSystem::from_equations(eqs).unwrap()
    }

    #[test]
    fn schur_mean_block_matches_full_inverse() {
        let a = DMatrix::from_fn(5, 5, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        let info = &a * a.transpose() + DMatrix::identity(5, 5);
        let full = info.clone().try_inverse().unwrap();
        let block = mean_block_covariance(&info, 2).unwrap();
        assert!((block - full.view((0, 0), (2, 2))).amax() < 1e-10);
    }

    #[test]
    fn schur_ignores_unidentified_variance_directions() {
        let mut info = DMatrix::zeros(4, 4);
        info[(0, 0)] = 4.0;
        info[(1, 1)] = 2.0;
        info[(0, 2)] = 1.0;
        info[(2, 0)] = 1.0;
        info[(2, 2)] = 1.0;
        let block = mean_block_covariance(&info, 2).unwrap();
        assert!((block[(0, 0)] - 1.0 / 3.0).abs() < 1e-12);
        assert!((block[(1, 1)] - 0.5).abs() < 1e-12);
    }

    /// Gaussian SURE log-likelihood with constant covariance Σ.
    fn gaussian_loglik(residuals: &[DVector<f64>], sigma: &DMatrix<f64>) -> f64 {
        let n = residuals.len();
        let chol = sigma.clone().cholesky().unwrap();
        let log_det = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let mut total = 0.0;
        for t in 0..residuals[0].len() {
            let e = DVector::from_fn(n, |i, _| residuals[i][t]);
            total += -0.5 * (n as f64 * (2.0 * std::f64::consts::PI).ln() + log_det + e.dot(&chol.solve(&e)));
        }
        total
    }

    #[test]
    fn vech_index_enumerates_lower_triangle() {
        let got: Vec<_> = (0..6).map(vech_index).collect();
        assert_eq!(got, vec![(0, 0), (1, 0), (1, 1), (2, 0), (2, 1), (2, 2)]);
    }

    #[test]
    fn standard_normal_at_zero() {
        let sys = intercept_system(&[vec![0.0; 100]]);
        let spec = GarchSpec::uniform(1, 1.0, 0.0, 0.0, DMatrix::identity(1, 1), 1e6);
        let ll = garch_t_loglik(&DVector::zeros(1), &spec, &sys).unwrap();
        let expected = -50.0 * (2.0 * std::f64::consts::PI).ln();
        assert!((ll - expected).abs() < 1e-3, "{ll} vs {expected}");
    }

    #[test]
    fn large_nu_without_dynamics_is_gaussian() {
        let spec = GarchSpec { omega: vec![0.5, 2.0], alpha: vec![0.0; 2], beta: vec![0.0; 2], correlation: corr2(0.4), nu: 1e6 };
        let data = simulate_ccc_garch_t(&GarchSpec { nu: 6.0, ..spec.clone() }, 60, 3).unwrap();
        let sys = intercept_system(&data);
        let c = DVector::from_vec(vec![0.1, -0.2]);
        let ll = garch_t_loglik(&c, &spec, &sys).unwrap();
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5f64.sqrt(), 2.0f64.sqrt()]));
        let sigma = &d * corr2(0.4) * &d;
        let gauss = gaussian_loglik(&sys.residuals(&c), &sigma);
        assert!((ll - gauss).abs() < 1e-3, "{ll} vs {gauss}");
    }

    #[test]
    fn relabeling_equations_leaves_loglik_unchanged() {
        let spec = GarchSpec {
            omega: vec![0.1, 0.3, 0.2],
            alpha: vec![0.1, 0.05, 0.2],
            beta: vec![0.8, 0.9, 0.6],
            correlation: DMatrix::from_row_slice(3, 3, &[1.0, 0.3, -0.2, 0.3, 1.0, 0.1, -0.2, 0.1, 1.0]),
            nu: 7.0,
        };
        let data = simulate_ccc_garch_t(&spec, 200, 5).unwrap();
        let perm = [2, 0, 1];
        let permuted: Vec<Vec<f64>> = perm.iter().map(|&p| data[p].clone()).collect();
        let pspec = GarchSpec {
            omega: perm.iter().map(|&p| spec.omega[p]).collect(),
            alpha: perm.iter().map(|&p| spec.alpha[p]).collect(),
            beta: perm.iter().map(|&p| spec.beta[p]).collect(),
            correlation: DMatrix::from_fn(3, 3, |i, j| spec.correlation[(perm[i], perm[j])]),
            nu: 7.0,
        };
        let a = garch_t_loglik(&DVector::zeros(3), &spec, &intercept_system(&data)).unwrap();
        let b = garch_t_loglik(&DVector::zeros(3), &pspec, &intercept_system(&permuted)).unwrap();
        assert!((a - b).abs() < 1e-9 * a.abs());
    }

    #[test]
    fn invalid_spec_is_rejected() {
        let sys = intercept_system(&[vec![0.1, -0.2, 0.3, 0.0]]);
        let bad = GarchSpec::uniform(1, 1.0, 0.6, 0.5, DMatrix::identity(1, 1), 5.0);
        assert!(garch_t_loglik(&DVector::zeros(1), &bad, &sys).is_err());
        let bad_nu = GarchSpec::uniform(1, 1.0, 0.1, 0.5, DMatrix::identity(1, 1), 2.0);
        assert!(bad_nu.validate().is_err());
    }

    #[test]
    fn transform_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..200 {
            let n = rng.random_range(1..5);
            let k = rng.random_range(0..4);
            let theta = DVector::from_fn(k + GarchSpec::n_params(n), |_, _| rng.random_range(-3.0..3.0));
            let (c, spec) = from_unconstrained(&theta, k, n);
            spec.validate().unwrap();
            let back = to_unconstrained(&c, &spec).unwrap();
            assert!((&back - &theta).amax() < 1e-10, "{theta} vs {back}");
        }
    }

    #[test]
    fn simulation_is_seeded() {
        let spec = GarchSpec::uniform(2, 0.1, 0.1, 0.8, corr2(0.5), 8.0);
        assert_eq!(simulate_ccc_garch_t(&spec, 50, 9).unwrap(), simulate_ccc_garch_t(&spec, 50, 9).unwrap());
        assert_ne!(simulate_ccc_garch_t(&spec, 50, 9).unwrap(), simulate_ccc_garch_t(&spec, 50, 10).unwrap());
    }

    #[test]
    fn homoskedastic_simulation_matches_omega() {
        let spec = GarchSpec { omega: vec![0.5, 2.0], alpha: vec![0.0; 2], beta: vec![0.0; 2], correlation: DMatrix::identity(2, 2), nu: 1e6 };
        let data = simulate_ccc_garch_t(&spec, 100_000, 1).unwrap();
        let cov = residual_covariance(&data.iter().map(|s| DVector::from_vec(s.clone())).collect::<Vec<_>>());
        assert!((cov[(0, 0)] / 0.5 - 1.0).abs() < 0.05);
        assert!((cov[(1, 1)] / 2.0 - 1.0).abs() < 0.05);
        assert!(cov[(0, 1)].abs() < 0.05);
    }

    #[test]
    fn garch_innovations_are_leptokurtic() {
        let spec = GarchSpec::uniform(2, 1.0, 0.3, 0.6, DMatrix::identity(2, 2), 1e6);
        for s in simulate_ccc_garch_t(&spec, 20_000, 4).unwrap() {
            let t = s.len() as f64;
            let m2 = s.iter().map(|e| e * e).sum::<f64>() / t;
            let m4 = s.iter().map(|e| e.powi(4)).sum::<f64>() / t;
            assert!(m4 / (m2 * m2) > 3.0);
        }
    }

    #[test]
    fn arch_lm_rejects_constant_residuals() {
        let r = vec![DVector::from_element(50, 1.0), DVector::from_element(50, -1.0)];
        assert!(matches!(arch_lm_diag(&r, 1), Err(Error::Degenerate(_))));
    }

    #[test]
    fn arch_lm_needs_observations() {
        let r = vec![DVector::from_fn(10, |i, _| (i as f64).sin()); 3];
        assert!(matches!(arch_lm_diag(&r, 2), Err(Error::InsufficientObservations { .. })));
    }

    #[test]
    fn arch_lm_size_and_power() {
        let reps = 300;
        let mut size_hits = 0;
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..reps {
            let r: Vec<DVector<f64>> = (0..2).map(|_| DVector::from_fn(500, |_, _| rng.sample(StandardNormal))).collect();
            if arch_lm_diag(&r, 1).unwrap().p_value < 0.05 {
                size_hits += 1;
            }
        }
        let size = size_hits as f64 / reps as f64;
        assert!((0.02..=0.09).contains(&size), "size {size}");

        let spec = GarchSpec::uniform(1, 1.0, 0.3, 0.6, DMatrix::identity(1, 1), 1e6);
        let seeds = 30;
        let power_hits = (0..seeds)
            .filter(|&s| {
                let e = simulate_ccc_garch_t(&spec, 1000, 500 + s).unwrap();
                arch_lm_diag(&[DVector::from_vec(e[0].clone())], 1).unwrap().p_value < 0.05
            })
            .count();
        assert!(power_hits as f64 >= 0.9 * seeds as f64, "power hits {power_hits}");
    }

    #[test]
    fn fit_improves_on_start_and_trace_is_monotone() {
        let spec = GarchSpec::uniform(2, 0.05, 0.1, 0.85, corr2(0.5), 8.0);
        let data = simulate_ccc_garch_t(&spec, 800, 12).unwrap();
        let sys = intercept_system(&data);
        let fit = fit_sure_garch_t(&sys, None).unwrap();
        assert!(fit.loglik >= fit.initial_loglik);
        assert!(fit.trace.windows(2).all(|w| w[1] >= w[0]));
        fit.garch.validate().unwrap();
        assert_eq!(fit.mean.estimator, Estimator::GarchTMl);
        assert!((&fit.information - fit.information.transpose()).amax() < 1e-9);
        let direct = garch_t_loglik(&fit.mean.coefficients, &fit.garch, &sys).unwrap();
        assert!((direct - fit.loglik).abs() < 1e-8 * fit.loglik.abs());
    }
}
