use approx::assert_relative_eq;
use asymcause_core::decomposition::{decompose, DeterministicSpec};
use asymcause_core::montecarlo::{simulate_dgp, DgpConfig};
use asymcause_core::sure::{build_design, CoefficientEstimate, Estimator};
use asymcause_core::wald::{restriction_for, wald_test, HypothesisId, HypothesisSpec, RestrictionMode};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn estimate(coefficients: Vec<f64>, covariance: DMatrix<f64>) -> CoefficientEstimate {
    CoefficientEstimate {
        coefficients: DVector::from_vec(coefficients),
        covariance,
        omega: DMatrix::identity(1, 1),
        residuals: Vec::new(),
        estimator: Estimator::Ols,
        iterations: 1,
        converged: true,
    }
}

fn spec(restriction: DMatrix<f64>) -> HypothesisSpec {
    let mut s = restriction_for(HypothesisId::H1, &layout(), RestrictionMode::PerLag).unwrap();
    s.dof = restriction.nrows();
    s.restriction = restriction;
    s
}

fn layout() -> asymcause_core::sure::Layout {
    let series = simulate_dgp(&DgpConfig::independent_walks(2, 0.1, 120, 9)).unwrap();
    let comps: Vec<_> = series.iter().map(|s| decompose(s, DeterministicSpec::Drift).unwrap()).collect();
    build_design(&comps, 1, 1, 1).unwrap().layout
}

const K: usize = 5;
const Q: usize = 3;

proptest! {
    #[test]
    fn statistic_is_invariant_to_row_recombination(
        c in prop::collection::vec(-2.0..2.0f64, K),
        a in prop::collection::vec(-1.0..1.0f64, K * K),
        r in prop::collection::vec(-1.0..1.0f64, Q * K),
        lower in prop::collection::vec(-1.0..1.0f64, Q * Q),
        diag in prop::collection::vec(0.5..2.0f64, Q),
    ) {
        let a = DMatrix::from_vec(K, K, a);
        let cov = &a * a.transpose() + DMatrix::identity(K, K) * 0.1;
        let mut r = DMatrix::from_vec(Q, K, r);
        for i in 0..Q {
            r[(i, i)] += 3.0;
        }
        let m = DMatrix::from_fn(Q, Q, |i, j| if i == j { diag[i] } else if i > j { lower[i * Q + j] } else { 0.0 });
        let est = estimate(c, cov);
        let w = wald_test(&est, &spec(r.clone())).unwrap().statistic;
        let wm = wald_test(&est, &spec(&m * r)).unwrap().statistic;
        assert_relative_eq!(w, wm, max_relative = 1e-8, epsilon = 1e-10);
    }
}

#[test]
fn joint_test_adds_up_under_block_diagonal_covariance() {
    let layout = layout();
    let k = layout.len();
    for seed in 0..10u64 {
        let c: Vec<f64> = (0..k).map(|i| ((seed * 31 + i as u64 * 17) % 13) as f64 / 13.0 - 0.5).collect();
        let cov = DMatrix::from_diagonal(&DVector::from_fn(k, |i, _| 0.01 + 0.002 * i as f64));
        let est = estimate(c, cov);
        let w = |id| wald_test(&est, &restriction_for(id, &layout, RestrictionMode::PerLag).unwrap()).unwrap().statistic;
        let (w1, w2, w3) = (w(HypothesisId::H1), w(HypothesisId::H2), w(HypothesisId::H3));
        assert!(w3 >= w1 && w3 >= w2);
        assert_relative_eq!(w3, w1 + w2, max_relative = 1e-10);
    }
}
