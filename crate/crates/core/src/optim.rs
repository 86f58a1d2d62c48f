//! BFGS maximization with backtracking line search and finite-difference
//! derivatives.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfgsOptions {
    pub max_iter: usize,
    /// Stop when the max-norm of the gradient falls below this.
    pub grad_tol: f64,
    /// Stop when the relative objective change falls below this.
    pub rel_tol: f64,
    /// Relative step for central-difference gradients.
    pub grad_step: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self { max_iter: 500, grad_tol: 1e-5, rel_tol: 1e-10, grad_step: 1e-5 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BfgsOutcome {
    pub argmax: DVector<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective value after every accepted step, starting point first.
    pub trace: Vec<f64>,
    pub gradient_norm: f64,
}

fn step_size(x: f64, rel: f64) -> f64 {
    rel * x.abs().max(1.0)
}

/// Central-difference gradient; non-finite evaluations yield `None`.
pub fn gradient<F>(f: &F, x: &DVector<f64>, rel_step: f64) -> Option<DVector<f64>>
where
    F: Fn(&DVector<f64>) -> Option<f64>,
{
    let mut g = DVector::zeros(x.len());
    let mut probe = x.clone();
    for i in 0..x.len() {
        let h = step_size(x[i], rel_step);
        probe[i] = x[i] + h;
        let up = f(&probe)?;
        probe[i] = x[i] - h;
        let down = f(&probe)?;
        probe[i] = x[i];
        g[i] = (up - down) / (2.0 * h);
    }
    Some(g)
}

/// Central-difference Hessian with per-coordinate step `rel_step·max(|x|, 1)`.
pub fn hessian<F>(f: &F, x: &DVector<f64>, rel_step: f64) -> Option<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> Option<f64>,
{
    let n = x.len();
    let steps: Vec<f64> = x.iter().map(|&v| step_size(v, rel_step)).collect();
    let f0 = f(x)?;
    let mut hess = DMatrix::zeros(n, n);
    let mut probe = x.clone();
    for i in 0..n {
        let hi = steps[i];
        probe[i] = x[i] + hi;
        let up = f(&probe)?;
        probe[i] = x[i] - hi;
        let down = f(&probe)?;
        probe[i] = x[i];
        hess[(i, i)] = (up - 2.0 * f0 + down) / (hi * hi);
        for j in 0..i {
            let hj = steps[j];
            let mut corner = |si: f64, sj: f64| {
                probe[i] = x[i] + si * hi;
                probe[j] = x[j] + sj * hj;
                let v = f(&probe);
                probe[i] = x[i];
                probe[j] = x[j];
                v
            };
            let pp = corner(1.0, 1.0)?;
            let pm = corner(1.0, -1.0)?;
            let mp = corner(-1.0, 1.0)?;
            let mm = corner(-1.0, -1.0)?;
            let v = (pp - pm - mp + mm) / (4.0 * hi * hj);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    Some(hess)
}

/// Maximizes `f` from `start`. `f` returns `None` where it is undefined; the
/// line search treats such points as rejected trial steps.
pub fn maximize<F>(f: F, start: DVector<f64>, options: &BfgsOptions) -> Option<BfgsOutcome>
where
    F: Fn(&DVector<f64>) -> Option<f64>,
{
    let n = start.len();
    let mut x = start;
    let mut fx = f(&x)?;
    let mut g = gradient(&f, &x, options.grad_step)?;
    let mut inv_h = DMatrix::<f64>::identity(n, n);
    let mut trace = vec![fx];
    let mut converged = false;
    let mut iterations = 0;
    let mut scaled_initial = false;

    while iterations < options.max_iter {
        if g.amax() < options.grad_tol {
            converged = true;
            break;
        }
        let mut direction = &inv_h * &g;
        if direction.dot(&g) <= 0.0 {
            // lost ascent property: fall back to steepest ascent
            inv_h = DMatrix::identity(n, n);
            direction = g.clone();
        }
        if !scaled_initial {
            // keep the very first trial step modest
            let norm = direction.norm();
            if norm > 1.0 {
                direction /= norm;
            }
        }

        let slope = direction.dot(&g);
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = &x + &direction * alpha;
            if let Some(ft) = f(&trial) {
                if ft.is_finite() && ft >= fx + 1e-4 * alpha * slope {
                    accepted = Some((trial, ft));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((x_new, f_new)) = accepted else {
            break;
        };
        let g_new = gradient(&f, &x_new, options.grad_step)?;
        iterations += 1;

        let s = &x_new - &x;
        // minimizing -f: y = -(g_new - g)
        let y = &g - &g_new;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            if !scaled_initial {
                inv_h = DMatrix::identity(n, n) * (sy / y.dot(&y));
                scaled_initial = true;
            }
            let rho = 1.0 / sy;
            let hy = &inv_h * &y;
            let yhy = y.dot(&hy);
            inv_h += (&s * s.transpose()) * (rho * rho * yhy + rho) - (&hy * s.transpose() + &s * hy.transpose()) * rho;
        }

        let rel_change = (f_new - fx).abs() / fx.abs().max(1.0);
        x = x_new;
        fx = f_new;
        g = g_new;
        trace.push(fx);
        if rel_change < options.rel_tol {
            converged = true;
            break;
        }
    }

    Some(BfgsOutcome { gradient_norm: g.amax(), argmax: x, value: fx, iterations, converged, trace })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maximizes_a_concave_quadratic() {
        let target = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 2.0]);
        let t2 = target.clone();
        let f = move |x: &DVector<f64>| {
            let d = x - &t2;
            Some(-0.5 * d.dot(&(&a * &d)))
        };
        let out = maximize(f, DVector::zeros(3), &BfgsOptions::default()).unwrap();
        assert!(out.converged);
        assert!((&out.argmax - &target).amax() < 1e-5);
        assert!(out.trace.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn rosenbrock_with_undefined_region() {
        // undefined for x0 < -2, which the line search must avoid
        let f = |x: &DVector<f64>| {
            if x[0] < -2.0 {
                return None;
            }
            Some(-((1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)))
        };
        let opts = BfgsOptions { max_iter: 2000, rel_tol: 0.0, grad_tol: 1e-7, ..Default::default() };
        let out = maximize(f, DVector::from_vec(vec![-1.2, 1.0]), &opts).unwrap();
        assert!((out.argmax[0] - 1.0).abs() < 1e-3 && (out.argmax[1] - 1.0).abs() < 1e-3, "{:?}", out.argmax);
    }

    #[test]
    fn finite_difference_hessian_of_quadratic() {
        let f = |x: &DVector<f64>| Some(3.0 * x[0] * x[0] + 2.0 * x[0] * x[1] - x[1] * x[1]);
        let h = hessian(&f, &DVector::from_vec(vec![0.3, -0.7]), 1e-4).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[6.0, 2.0, 2.0, -2.0]);
        assert!((h - expected).amax() < 1e-5);
    }
}
