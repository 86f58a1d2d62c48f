//! Wald tests of linear restrictions `R c = 0` and the ten-hypothesis catalog.
//!
//! Variable 1 is the first component handed to [`crate::sure::build_design`],
//! variable 2 the second. `beta±[2,k]` measures the effect of variable 2 on
//! variable 1 within a sign block, `gamma±[1,k]` the reverse effect.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::gamma_q;
use crate::sure::{CoefficientEstimate, Estimator, Layout, Sign};

/// Hypotheses in catalog order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HypothesisId {
    H1,
    H2,
    H3,
    H4,
    H5,
    H6,
    H7,
    H8,
    H9,
    H10,
}

impl HypothesisId {
    pub const ALL: [HypothesisId; 10] = [
        HypothesisId::H1,
        HypothesisId::H2,
        HypothesisId::H3,
        HypothesisId::H4,
        HypothesisId::H5,
        HypothesisId::H6,
        HypothesisId::H7,
        HypothesisId::H8,
        HypothesisId::H9,
        HypothesisId::H10,
    ];

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|&h| h == self).expect("listed")
    }
}

impl std::fmt::Display for HypothesisId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "H{}", self.index() + 1)
    }
}

impl std::str::FromStr for HypothesisId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let idx: usize = s
            .trim()
            .trim_start_matches(['H', 'h'])
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("unknown hypothesis `{s}`")))?;
        Self::ALL
            .get(idx.wrapping_sub(1))
            .copied()
            .ok_or_else(|| Error::InvalidArgument(format!("unknown hypothesis `{s}`")))
    }
}

/// How the no-causality hypotheses restrict a block of lag coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RestrictionMode {
    /// Every restricted lag coefficient is zero (`q = P`).
    #[default]
    PerLag,
    /// The sum of the restricted lag coefficients is zero (`q = 1`).
    Sum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisSpec {
    pub id: HypothesisId,
    pub restriction: DMatrix<f64>,
    pub dof: usize,
    /// Restriction written out over coefficient names.
    pub label: String,
    /// What the null hypothesis means in words.
    pub implication: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaldResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub hypothesis: HypothesisSpec,
    pub estimate_provenance: Estimator,
}

/// `P(χ²_q > x)`.
pub fn chisq_sf(x: f64, q: usize) -> f64 {
    assert!(q >= 1, "chi-square degrees of freedom must be positive");
    if x.is_nan() {
        return f64::NAN;
    }
    if x <= 0.0 {
        return 1.0;
    }
    gamma_q(q as f64 / 2.0, x / 2.0)
}

/// One row of `R`: a set of `(position, weight)` pairs plus its text form.
#[derive(Clone)]
struct Row {
    weights: Vec<(usize, f64)>,
    text: String,
}

struct Catalog<'a> {
    layout: &'a Layout,
    mode: RestrictionMode,
}

impl Catalog<'_> {
    fn lags(&self, equation_var: usize, sign: Sign, regressor_var: usize) -> Result<Vec<usize>> {
        let found = self.layout.restricted_lags(equation_var, sign, regressor_var);
        if found.is_empty() {
            return Err(Error::MissingSymbol(format!(
                "the lags of variable {} in the {}{} equation",
                regressor_var + 1,
                equation_var + 1,
                sign.symbol()
            )));
        }
        Ok(found)
    }

    fn name(&self, pos: usize) -> String {
        self.layout.entry(pos).map(|e| e.name.clone()).unwrap_or_default()
    }

    fn zero(&self, equation_var: usize, sign: Sign, regressor_var: usize) -> Result<Vec<Row>> {
        let lags = self.lags(equation_var, sign, regressor_var)?;
        Ok(match self.mode {
            RestrictionMode::PerLag => {
                lags.iter().map(|&p| Row { weights: vec![(p, 1.0)], text: format!("{} = 0", self.name(p)) }).collect()
            }
            RestrictionMode::Sum => vec![Row {
                text: format!("{} = 0", self.sum_text(&lags)),
                weights: lags.iter().map(|&p| (p, 1.0)).collect(),
            }],
        })
    }

    fn sum_text(&self, lags: &[usize]) -> String {
        if lags.len() == 1 {
            self.name(lags[0])
        } else {
            format!("({})", lags.iter().map(|&p| self.name(p)).collect::<Vec<_>>().join(" + "))
        }
    }

    /// `Σ (positive block lags) − Σ (negative block lags) = 0`.
    fn symmetric(&self, equation_var: usize, regressor_var: usize) -> Result<Vec<Row>> {
        let pos = self.lags(equation_var, Sign::Positive, regressor_var)?;
        let neg = self.lags(equation_var, Sign::Negative, regressor_var)?;
        let mut weights: Vec<(usize, f64)> = pos.iter().map(|&p| (p, 1.0)).collect();
        weights.extend(neg.iter().map(|&p| (p, -1.0)));
        Ok(vec![Row { text: format!("{} - {} = 0", self.sum_text(&pos), self.sum_text(&neg)), weights }])
    }
}

fn implication(id: HypothesisId, v1: &str, v2: &str) -> String {
    match id {
        HypothesisId::H1 => format!("Positive shocks in {v2} do not cause positive shocks in {v1}."),
        HypothesisId::H2 => format!("Negative shocks in {v2} do not cause negative shocks in {v1}."),
        HypothesisId::H3 => format!("Neither positive nor negative shocks in {v2} cause the same-signed shocks in {v1}."),
        HypothesisId::H4 => format!("Positive and negative shocks in {v2} have the same impact on {v1} (symmetric causality)."),
        HypothesisId::H5 => format!("Positive shocks in {v1} do not cause positive shocks in {v2}."),
        HypothesisId::H6 => format!("Negative shocks in {v1} do not cause negative shocks in {v2}."),
        HypothesisId::H7 => format!("Neither positive nor negative shocks in {v1} cause the same-signed shocks in {v2}."),
        HypothesisId::H8 => format!("Positive and negative shocks in {v1} have the same impact on {v2} (symmetric causality)."),
        HypothesisId::H9 => format!("{v1} and {v2} do not cause each other through either positive or negative shocks."),
        HypothesisId::H10 => format!("The causal impacts between {v1} and {v2} are jointly symmetric."),
    }
}

/// Restriction matrix for hypothesis `id` over `layout`.
///
/// Variables 1 and 2 of the layout are the pair under test; any further
/// variables act as controls.
pub fn restriction_for(id: HypothesisId, layout: &Layout, mode: RestrictionMode) -> Result<HypothesisSpec> {
    if layout.variables.len() < 2 {
        return Err(Error::MissingSymbol(format!("{id} (needs a system with at least two variables)")));
    }
    let cat = Catalog { layout, mode };
    // (equation variable, regressor variable): 0 ← 1 is beta[2,.], 1 ← 0 is gamma[1,.]
    let rows = match id {
        HypothesisId::H1 => cat.zero(0, Sign::Positive, 1)?,
        HypothesisId::H2 => cat.zero(0, Sign::Negative, 1)?,
        HypothesisId::H3 => [cat.zero(0, Sign::Positive, 1)?, cat.zero(0, Sign::Negative, 1)?].concat(),
        HypothesisId::H4 => cat.symmetric(0, 1)?,
        HypothesisId::H5 => cat.zero(1, Sign::Positive, 0)?,
        HypothesisId::H6 => cat.zero(1, Sign::Negative, 0)?,
        HypothesisId::H7 => [cat.zero(1, Sign::Positive, 0)?, cat.zero(1, Sign::Negative, 0)?].concat(),
        HypothesisId::H8 => cat.symmetric(1, 0)?,
        HypothesisId::H9 => [
            cat.zero(0, Sign::Positive, 1)?,
            cat.zero(0, Sign::Negative, 1)?,
            cat.zero(1, Sign::Positive, 0)?,
            cat.zero(1, Sign::Negative, 0)?,
        ]
        .concat(),
        HypothesisId::H10 => [cat.symmetric(0, 1)?, cat.symmetric(1, 0)?].concat(),
    };
    let k = layout.len();
    let mut restriction = DMatrix::zeros(rows.len(), k);
    for (r, row) in rows.iter().enumerate() {
        for &(pos, w) in &row.weights {
            restriction[(r, pos)] = w;
        }
    }
    let label = rows.iter().map(|r| r.text.as_str()).collect::<Vec<_>>().join(", ");
    Ok(HypothesisSpec {
        id,
        dof: rows.len(),
        restriction,
        label,
        implication: implication(id, &layout.variables[0], &layout.variables[1]),
    })
}

/// `W = (Rc)' [R Var(c) R']⁻¹ (Rc)` with a `χ²_q` p-value.
pub fn wald_test(estimate: &CoefficientEstimate, spec: &HypothesisSpec) -> Result<WaldResult> {
    let r = &spec.restriction;
    let k = estimate.coefficients.len();
    if r.ncols() != k || estimate.covariance.shape() != (k, k) {
        return Err(Error::LengthMismatch(format!(
            "restriction has {} columns, estimate has {k} coefficients",
            r.ncols()
        )));
    }
    let rc: DVector<f64> = r * &estimate.coefficients;
    let middle = r * &estimate.covariance * r.transpose();
    let middle = (&middle + middle.transpose()) * 0.5;
    let eig = middle.clone().symmetric_eigen();
    let max = eig.eigenvalues.amax();
    if !(max > 0.0) || eig.eigenvalues.iter().any(|&e| e <= max * 1e-12) {
        return Err(Error::Singular(format!("R Var(c) R' for {}", spec.id)));
    }
    let chol = middle.cholesky().ok_or_else(|| Error::Singular(format!("R Var(c) R' for {}", spec.id)))?;
    let statistic = rc.dot(&chol.solve(&rc)).max(0.0);
    Ok(WaldResult {
        statistic,
        dof: spec.dof,
        p_value: chisq_sf(statistic, spec.dof),
        hypothesis: spec.clone(),
        estimate_provenance: estimate.estimator,
    })
}

/// All ten hypotheses in catalog order.
pub fn run_catalog(estimate: &CoefficientEstimate, layout: &Layout, mode: RestrictionMode) -> Result<Vec<WaldResult>> {
    HypothesisId::ALL
        .iter()
        .map(|&id| restriction_for(id, layout, mode).and_then(|spec| wald_test(estimate, &spec)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::{decompose, DeterministicSpec, Series};
    use crate::sure::{build_design, fgls_fit, DEFAULT_FGLS_MAX_ITER, DEFAULT_FGLS_TOL};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    /// Standard normal density integrated by composite Simpson.
    fn normal_mass(upper: f64) -> f64 {
        let n = 20_000;
        let h = upper / n as f64;
        let f = |u: f64| (-(u * u) / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut acc = f(0.0) + f(upper);
        for i in 1..n {
            acc += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    }

    /// `P(χ²_1 > x) = 1 − 2 ∫_0^√x φ(u) du`.
    fn chisq1_oracle(x: f64) -> f64 {
        1.0 - 2.0 * normal_mass(x.sqrt())
    }

    /// Closed form for even degrees of freedom.
    fn chisq_even_oracle(x: f64, q: usize) -> f64 {
        let half = x / 2.0;
        let mut term = 1.0;
        let mut sum = 1.0;
        for i in 1..q / 2 {
            term *= half / i as f64;
            sum += term;
        }
        (-half).exp() * sum
    }

    #[test]
    fn chisq_sf_matches_independent_oracles() {
        assert!((chisq1_oracle(3.841459) - 0.05).abs() < 1e-4);
        assert!((chisq_even_oracle(9.487729, 4) - 0.05).abs() < 1e-4);
        for &x in &[0.01, 0.5, 1.0, 3.841459, 6.63, 12.0, 25.0] {
            assert!((chisq_sf(x, 1) - chisq1_oracle(x)).abs() < 1e-9, "x = {x}");
            for q in [2, 4, 6, 10, 20] {
                assert!((chisq_sf(x, q) - chisq_even_oracle(x, q)).abs() < 1e-12, "x = {x}, q = {q}");
            }
        }
        assert_eq!(chisq_sf(0.0, 5), 1.0);
    }

    #[test]
    fn chisq_sf_is_monotone() {
        for q in 1..8 {
            let mut last = 1.0;
            for i in 0..400 {
                let v = chisq_sf(i as f64 * 0.1, q);
                assert!(v <= last + 1e-15);
                last = v;
            }
        }
    }

    fn manual_estimate(coefficients: Vec<f64>, covariance: DMatrix<f64>) -> CoefficientEstimate {
        CoefficientEstimate {
            coefficients: DVector::from_vec(coefficients),
            covariance,
            omega: DMatrix::identity(1, 1),
            residuals: vec![],
            estimator: Estimator::Fgls,
            iterations: 1,
            converged: true,
        }
    }

    fn spec_from(rows: DMatrix<f64>) -> HypothesisSpec {
        HypothesisSpec { id: HypothesisId::H1, dof: rows.nrows(), restriction: rows, label: String::new(), implication: String::new() }
    }

    #[test]
    fn single_restriction_is_t_squared() {
        let est = manual_estimate(vec![2.0], DMatrix::identity(1, 1));
        let res = wald_test(&est, &spec_from(DMatrix::from_element(1, 1, 1.0))).unwrap();
        assert!((res.statistic - 4.0).abs() < 1e-12);
        assert!((res.p_value - chisq1_oracle(4.0)).abs() < 1e-9);
        assert!((res.p_value - 0.0455).abs() < 1e-4);
    }

    #[test]
    fn zero_estimate_gives_zero_statistic() {
        let est = manual_estimate(vec![0.0, 0.0], DMatrix::identity(2, 2));
        let res = wald_test(&est, &spec_from(DMatrix::identity(2, 2))).unwrap();
        assert_eq!(res.statistic, 0.0);
        assert_eq!(res.p_value, 1.0);
    }

    #[test]
    fn row_scaling_leaves_statistic_unchanged() {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 2.0]);
        let est = manual_estimate(vec![0.7, -0.4], cov);
        let a = wald_test(&est, &spec_from(DMatrix::from_row_slice(1, 2, &[1.0, -1.0]))).unwrap();
        let b = wald_test(&est, &spec_from(DMatrix::from_row_slice(1, 2, &[5.0, -5.0]))).unwrap();
        assert!((a.statistic - b.statistic).abs() < 1e-12 * a.statistic);
    }

    #[test]
    fn degenerate_restriction_set_is_an_error() {
        let est = manual_estimate(vec![1.0, 1.0], DMatrix::identity(2, 2));
        let dup = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 2.0, 0.0]);
        assert!(matches!(wald_test(&est, &spec_from(dup)), Err(Error::Singular(_))));
    }

    fn layout_p(p_pos: usize, p_neg: usize, extra: usize) -> Layout {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let comps: Vec<_> = ["us", "cn"]
            .iter()
            .map(|name| {
                let mut z = vec![0.0];
                for _ in 0..80 {
                    let e: f64 = rng.sample(StandardNormal);
                    let last = *z.last().unwrap();
                    z.push(last + e);
                }
                decompose(&Series::new(*name, z).unwrap(), DeterministicSpec::Drift).unwrap()
            })
            .collect();
        build_design(&comps, p_pos, p_neg, extra).unwrap().layout
    }

    #[test]
    fn h1_selects_the_single_cross_lag() {
        let layout = layout_p(1, 1, 1);
        let spec = restriction_for(HypothesisId::H1, &layout, RestrictionMode::PerLag).unwrap();
        assert_eq!(spec.restriction.shape(), (1, 20));
        let pos = layout.position("beta+[2,1]").unwrap();
        assert_eq!(spec.restriction[(0, pos)], 1.0);
        assert_eq!(spec.restriction.iter().filter(|&&v| v != 0.0).count(), 1);
        assert_eq!(spec.label, "beta+[2,1] = 0");
    }

    #[test]
    fn h4_contrasts_positive_and_negative_cross_lags() {
        let layout = layout_p(1, 1, 1);
        let spec = restriction_for(HypothesisId::H4, &layout, RestrictionMode::PerLag).unwrap();
        assert_eq!(spec.dof, 1);
        assert_eq!(spec.restriction[(0, layout.position("beta+[2,1]").unwrap())], 1.0);
        assert_eq!(spec.restriction[(0, layout.position("beta-[2,1]").unwrap())], -1.0);
        assert_eq!(spec.restriction.iter().filter(|&&v| v != 0.0).count(), 2);
    }

    #[test]
    fn catalog_dimensions_at_lag_one() {
        let layout = layout_p(1, 1, 1);
        let dofs: Vec<usize> = HypothesisId::ALL
            .iter()
            .map(|&id| restriction_for(id, &layout, RestrictionMode::PerLag).unwrap().dof)
            .collect();
        assert_eq!(dofs, vec![1, 1, 2, 1, 1, 1, 2, 1, 4, 2]);
        let h9 = restriction_for(HypothesisId::H9, &layout, RestrictionMode::PerLag).unwrap();
        assert_eq!(h9.restriction.shape(), (4, 20));
        for name in ["beta+[2,1]", "beta-[2,1]", "gamma+[1,1]", "gamma-[1,1]"] {
            let col = layout.position(name).unwrap();
            assert_eq!(h9.restriction.column(col).sum(), 1.0, "{name}");
        }
    }

    #[test]
    fn restrictions_skip_intercepts_and_augmented_lags() {
        let layout = layout_p(2, 3, 1);
        for id in HypothesisId::ALL {
            for mode in [RestrictionMode::PerLag, RestrictionMode::Sum] {
                let spec = restriction_for(id, &layout, mode).unwrap();
                for (v, c) in spec.restriction.column_iter().enumerate() {
                    if c.iter().any(|&w| w != 0.0) {
                        assert!(layout.entry(v).unwrap().restricted, "{id} touches {}", layout.entry(v).unwrap().name);
                    }
                }
                let rank = spec.restriction.clone().svd(false, false).rank(1e-10);
                assert_eq!(rank, spec.dof, "{id} {mode:?}");
            }
        }
        let per_lag = restriction_for(HypothesisId::H3, &layout, RestrictionMode::PerLag).unwrap();
        assert_eq!(per_lag.dof, 5);
        let summed = restriction_for(HypothesisId::H3, &layout, RestrictionMode::Sum).unwrap();
        assert_eq!(summed.dof, 2);
        let h10 = restriction_for(HypothesisId::H10, &layout, RestrictionMode::PerLag).unwrap();
        assert_eq!(h10.dof, 2);
    }

    #[test]
    fn univariate_layout_lacks_symbols() {
        let layout = Layout { variables: vec!["x".into()], equations: vec![] };
        assert!(matches!(restriction_for(HypothesisId::H1, &layout, RestrictionMode::PerLag), Err(Error::MissingSymbol(_))));
    }

    #[test]
    fn hypothesis_ids_parse_and_print() {
        for id in HypothesisId::ALL {
            assert_eq!(id.to_string().parse::<HypothesisId>().unwrap(), id);
        }
        assert!("H11".parse::<HypothesisId>().is_err());
        assert!("H0".parse::<HypothesisId>().is_err());
    }

    #[test]
    fn zero_coefficients_give_zero_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let comps: Vec<_> = (0..2)
            .map(|i| {
                let mut z = vec![1.0];
                for _ in 0..150 {
                    let e: f64 = rng.sample(StandardNormal);
                    let last = *z.last().unwrap();
                    z.push(last + e);
                }
                decompose(&Series::new(format!("v{i}"), z).unwrap(), DeterministicSpec::Drift).unwrap()
            })
            .collect();
        let sys = build_design(&comps, 1, 1, 1).unwrap();
        let mut est = fgls_fit(&sys, DEFAULT_FGLS_TOL, DEFAULT_FGLS_MAX_ITER).unwrap();
        est.coefficients.fill(0.0);
        let results = run_catalog(&est, &sys.layout, RestrictionMode::PerLag).unwrap();
        assert_eq!(results.len(), 10);
        assert!(results.iter().all(|r| r.statistic == 0.0 && r.p_value == 1.0));
    }
}
