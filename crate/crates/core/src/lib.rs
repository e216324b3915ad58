#![forbid(unsafe_code)]
//! Filtering, filter-stability diagnostics, and robustness analysis for
//! finite partially observed Markov decision processes.
//!
//! The library answers two coupled questions about a finite POMDP whose
//! initial state distribution is misspecified:
//!
//! * does the incorrectly initialized filter merge with the correctly
//!   initialized one as observations accrue, and at what rate; and
//! * how much expected cost does a controller lose by acting on a policy
//!   designed around the wrong prior, compared against closed-form bounds
//!   driven by the contraction and observability structure of the model.
//!
//! Everything is built for desk-scale models where exact enumeration over
//! paths is feasible, so Monte Carlo estimates can always be checked
//! against independent exact routes. All sampling is counter-based and
//! seed-stable: identical seeds give bit-identical results regardless of
//! thread count.
//!
//! Module map:
//!
//! * [`model`] — the POMDP data model, validation, and the JSON file format.
//! * [`filter`] — predictor/filter recursion and the enumeration oracle.
//! * [`policy`] — observation-history policies fed to the estimators.
//! * [`metrics`] — divergences, expected filter discrepancy, and the
//!   two-route identity check for the expected predictor discrepancy.
//! * [`contraction`] — kernel overlap coefficients and the contraction
//!   constant with its `2 alpha^n` envelope.
//! * [`observability`] — channel rank test and minimax observation fits.
//! * [`control`] — belief-grid value iteration, mismatch evaluation, gap
//!   decomposition, and the robustness bounds.

pub mod contraction;
pub mod control;
pub mod filter;
mod mc;
pub mod metrics;
pub mod model;
pub mod observability;
pub mod policy;
mod simplex;

pub use contraction::{contraction_envelope, contraction_report, ContractionReport};
pub use control::{
    bound_continuity_average, bound_continuity_discounted, bound_prior_independent,
    cost_decomposition, evaluate_cost_average, evaluate_cost_discounted, robustness_gap,
    span_seminorm, BeliefGrid, BeliefPolicy, ControlError, CostDecomposition, Criterion,
    PriorIndependentBound, RobustnessReport, RobustnessSettings, TrackedGridPolicy,
    ValueIterationOptions,
};
pub use filter::{
    enumeration_oracle, measurement_update, run_filter, sample_trajectory, time_update,
    FilterError, FilterState, OracleEntry,
};
pub use metrics::{
    expected_filter_tv, filter_divergence_trace, relative_entropy, tv_distance,
    tv_martingale_identity_check, weak_surrogate, DivergenceTracePoint, Estimate, EstimateMethod,
    MartingaleCheck, MetricsError,
};
pub use model::{
    absolutely_continuous, load_model, save_model, Belief, ModelError, PomdpModel, Trajectory,
    ValidationReport, Violation,
};
pub use observability::{approximate_g, observability_report, ChannelFit, ObservabilityReport};
pub use policy::{FixedActionPolicy, HashRandomPolicy, Policy, PolicyCursor};
