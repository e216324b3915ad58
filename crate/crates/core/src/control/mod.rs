//! Belief-space dynamic programming and robustness evaluation: grid value
//! iteration for the fully observed belief process, cost evaluation under
//! a misspecified initial distribution, the transient/strategic/
//! approximation split of the mismatch gap, and the closed-form bounds it
//! is certified against.

mod bounds;
mod eval;
mod grid;
mod robustness;
mod solve;

pub use bounds::{
    bound_continuity_average, bound_continuity_discounted, bound_prior_independent,
    span_of_values, span_seminorm, PriorIndependentBound,
};
pub use eval::{
    cost_decomposition, evaluate_cost_average, evaluate_cost_discounted, AverageCostEstimate,
    CostDecomposition, CostEstimate, DecompositionSettings, DiscountedEvalMethod,
};
pub use grid::BeliefGrid;
pub use robustness::{robustness_gap, Criterion, RobustnessReport, RobustnessSettings};
pub use solve::{
    value_iteration_discounted, BeliefPolicy, TrackedGridCursor, TrackedGridPolicy,
    ValueIterationOptions,
};

use crate::contraction::ContractionError;
use crate::filter::FilterError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ControlError {
    #[error("value iteration did not converge after {sweeps} sweeps (residual {residual:e})")]
    NonConvergence { sweeps: usize, residual: f64 },
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("true prior is not absolutely continuous with respect to the design prior")]
    NotAbsolutelyContinuous,
    #[error("enumeration of {paths} observation paths exceeds the guard of {guard}")]
    EnumerationTooLarge { paths: u128, guard: u128 },
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Contraction(#[from] ContractionError),
}
