//! Numerics for large- and moderate-deviation limits of time-changed Lévy
//! models: exact samplers, Mittag-Leffler evaluation, a generic convex
//! conjugate engine, closed-form rate functions, and a verification harness
//! that cross-checks all of them against each other.
//!
//! The crate is organized around matched pairs: every closed-form rate
//! function or limit cumulant ships next to a construction of the equivalent
//! numerical Legendre-transform problem, so formulas and the generic engine
//! are permanently testable against one another.
//!
//! Extended-real convention: values in `[0, ∞]` and cumulants in `ℝ ∪ {+∞}`
//! are plain `f64` with `f64::INFINITY` meaning the infinite value. `NaN`
//! never crosses a public API boundary.

pub mod convergence_lab;
pub mod legendre;
pub mod levy_models;
pub mod linalg;
pub mod mittag_leffler;
pub mod oracle;
pub mod quadrature;
pub mod random_time;
pub mod rate_functions;
pub mod rng;

pub use legendre::{conjugate, contract, ConjugateProblem, ContractionProblem};
pub use levy_models::{
    CumulantSpec, JumpMixture, LevyModel, SubordinatorModel, TriangularSummandModel,
};
pub use mittag_leffler::{ml_eval, ml_log_eval, MlParams};
pub use random_time::{sample_time_changed, InverseStableModel, ScalingFamily, ScalingRegime};
pub use rate_functions::LimitCumulant;
pub use rng::SampleBatch;
