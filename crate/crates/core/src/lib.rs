//! Asymmetric causality tests between integrated series.
//!
//! Integrated series are split into positive and negative partial cumulative
//! sums ([`decomposition`]), stacked into a block autoregressive SURE system
//! ([`sure`]) that is estimated by iterated FGLS or by CCC-GARCH(1,1) with
//! multivariate t errors ([`mgarch`]), and the ten causality/asymmetry
//! hypotheses are evaluated with Wald statistics ([`wald`]).
//! [`montecarlo`] measures empirical size and power of the whole chain, and
//! [`pipeline`] wires the pieces together for callers such as the CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod decomposition;
pub mod error;
pub mod mgarch;
pub mod montecarlo;
pub mod optim;
pub mod pipeline;
pub mod special;
pub mod sure;
pub mod wald;

pub use decomposition::{decompose, fit_deterministic, recompose, DeterministicSpec, Series, SignedComponents};
pub use error::{Error, Result};
pub use mgarch::{arch_lm_diag, fit_sure_garch_t, garch_t_loglik, simulate_ccc_garch_t, ArchLmResult, GarchFit, GarchSpec};
pub use montecarlo::{empirical_size, simulate_dgp, simulate_replication, CausalFeedback, DgpConfig, ErrorTail, SizeStudy};
pub use pipeline::{analyze, Analysis, EstimatorChoice, LagChoice, PipelineOptions};
pub use sure::{
    build_design, fgls_fit, ols_fit, select_lags, CoefficientEstimate, Criterion, Estimator, LagSelection, Sign,
    SureSystem,
};
pub use wald::{chisq_sf, restriction_for, run_catalog, wald_test, HypothesisId, HypothesisSpec, RestrictionMode, WaldResult};
