//! End-to-end mismatch experiment: solve, evaluate under the wrong prior,
//! and compare the measured gap against every applicable bound.

use super::bounds::{
    bound_continuity_average, bound_continuity_discounted, bound_prior_independent, span_seminorm,
    PriorIndependentBound,
};
use super::eval::{mismatch_decomposition, paired_average_gap, CostDecomposition, DecompositionSettings};
use super::grid::BeliefGrid;
use super::solve::{value_iteration_discounted, BeliefPolicy, ValueIterationOptions};
use super::ControlError;
use crate::contraction::contraction_report;
use crate::metrics::tv_distance;
use crate::model::{Belief, PomdpModel};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Discounted,
    Average,
}

#[derive(Debug, Clone)]
pub struct RobustnessSettings {
    /// Belief-grid resolution for the solved policy.
    pub grid_resolution: usize,
    /// Resolution of the refinement used to quantify grid slack; defaults
    /// to twice `grid_resolution`.
    pub refined_resolution: Option<usize>,
    pub samples: usize,
    pub seed: u64,
    /// Discounted: evaluation horizon override (default: truncation
    /// horizon). Average: time-average horizon (default 2000).
    pub horizon: Option<usize>,
    /// Reference times for the gap decomposition (discounted only).
    pub decomposition_times: Vec<usize>,
    /// Discount used to stand in for the average-cost solution.
    pub beta_avg: f64,
    pub vi: ValueIterationOptions,
}

impl Default for RobustnessSettings {
    fn default() -> Self {
        Self {
            grid_resolution: 40,
            refined_resolution: None,
            samples: 100_000,
            seed: 1,
            horizon: None,
            decomposition_times: vec![5],
            beta_avg: 0.999,
            vi: ValueIterationOptions::default(),
        }
    }
}

/// Everything a mismatch experiment produces: the measured gap with its
/// standard error, each applicable bound, the decomposition, and the
/// numerical slack terms the comparisons must absorb.
#[derive(Debug, Clone, Serialize)]
pub struct RobustnessReport {
    pub criterion: Criterion,
    pub measured_gap: f64,
    pub measured_gap_se: f64,
    pub cost_mismatched: f64,
    pub cost_mismatched_se: f64,
    pub cost_matched: f64,
    pub cost_matched_se: f64,
    /// `2 ||c||_inf / (1-beta) * tv` (discounted) or `2 ||c||_inf * tv`
    /// (average).
    pub continuity_bound: f64,
    /// Present for the discounted criterion when the contraction
    /// coefficient lies in (0, 1).
    pub prior_independent: Option<PriorIndependentBound>,
    /// Grid lower estimate of the span of the optimal cost over priors;
    /// scaled by `1 - beta_avg` for the average criterion.
    pub span_estimate: f64,
    /// Worst disagreement between the working and refined grids' values,
    /// same scaling as `span_estimate`.
    pub grid_slack: f64,
    pub alpha: f64,
    pub tv_mu_nu: f64,
    pub decomposition: Vec<CostDecomposition>,
    /// Discounted tail neglected by the evaluation horizon.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation_bound: Option<f64>,
    /// Average criterion: |full-horizon - half-horizon| mismatched average.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub average_convergence_diagnostic: Option<f64>,
    pub evaluation_horizon: usize,
    pub grid_resolution: usize,
    pub refined_resolution: usize,
    pub samples: usize,
    pub seed: u64,
}

/// Worst value disagreement between a policy and its refinement, probed at
/// the refined grid's points. Probing at the finer points (rather than only
/// the shared coarse ones) also exercises the coarse projection between
/// grid points, so the figure covers quantization as well as value error.
fn grid_disagreement(coarse: &BeliefPolicy, fine: &BeliefPolicy) -> f64 {
    let gaps: Vec<f64> = fine
        .grid()
        .points()
        .iter()
        .enumerate()
        .map(|(i, b)| (coarse.value(b.probs()) - fine.values()[i]).abs())
        .collect();
    gaps.iter().copied().fold(0.0, f64::max)
}

/// Measures `J(mu, policy-for-nu) - J(mu, policy-for-mu)` and assembles the
/// report. Both policies come from one solved value function: the greedy
/// grid map is prior-independent, and a design prior enters only through
/// the filter it initializes.
pub fn robustness_gap(
    model: &PomdpModel,
    mu: &Belief,
    nu: &Belief,
    criterion: Criterion,
    settings: &RobustnessSettings,
) -> Result<RobustnessReport, ControlError> {
    let contraction = contraction_report(model)?;
    let tv = tv_distance(mu, nu).map_err(|_| {
        ControlError::InvalidDomain(format!("priors must have dimension {}", model.num_states))
    })?;
    let refined_resolution = settings.refined_resolution.unwrap_or(2 * settings.grid_resolution);

    match criterion {
        Criterion::Discounted => {
            let policy = value_iteration_discounted(
                model,
                BeliefGrid::new(model.num_states, settings.grid_resolution),
                settings.vi,
            )?;
            let refined = value_iteration_discounted(
                model,
                BeliefGrid::new(model.num_states, refined_resolution),
                settings.vi,
            )?;
            let grid_slack = grid_disagreement(&policy, &refined);
            let span_estimate = span_seminorm(model, &policy, None);

            let outcome = mismatch_decomposition(
                model,
                mu,
                nu,
                &policy,
                &settings.decomposition_times,
                DecompositionSettings {
                    samples: settings.samples,
                    seed: settings.seed,
                    horizon: settings.horizon,
                },
            )?;

            let prior_independent = if contraction.alpha > 0.0 && contraction.alpha < 1.0 {
                Some(bound_prior_independent(
                    contraction.alpha,
                    model.discount,
                    model.cost_sup(),
                    span_estimate,
                )?)
            } else {
                None
            };

            Ok(RobustnessReport {
                criterion,
                measured_gap: outcome.gap.value,
                measured_gap_se: outcome.gap.std_error,
                cost_mismatched: outcome.cost_mismatched.value,
                cost_mismatched_se: outcome.cost_mismatched.std_error,
                cost_matched: outcome.cost_matched.value,
                cost_matched_se: outcome.cost_matched.std_error,
                continuity_bound: bound_continuity_discounted(model, mu, nu),
                prior_independent,
                span_estimate,
                grid_slack,
                alpha: contraction.alpha,
                tv_mu_nu: tv,
                decomposition: outcome.decomposition,
                truncation_bound: Some(outcome.truncation_bound),
                average_convergence_diagnostic: None,
                evaluation_horizon: outcome.horizon,
                grid_resolution: settings.grid_resolution,
                refined_resolution,
                samples: settings.samples,
                seed: settings.seed,
            })
        }
        Criterion::Average => {
            // Stand-in for the average-cost solution: solve the discounted
            // problem at a discount close to one and rescale values by
            // (1 - beta_avg) wherever a per-stage quantity is needed.
            if !(settings.beta_avg > 0.0 && settings.beta_avg < 1.0) {
                return Err(ControlError::InvalidDomain(format!(
                    "beta_avg must lie in (0, 1), got {}",
                    settings.beta_avg
                )));
            }
            let mut surrogate = model.clone();
            surrogate.discount = settings.beta_avg;
            let policy = value_iteration_discounted(
                &surrogate,
                BeliefGrid::new(model.num_states, settings.grid_resolution),
                settings.vi,
            )?;
            let refined = value_iteration_discounted(
                &surrogate,
                BeliefGrid::new(model.num_states, refined_resolution),
                settings.vi,
            )?;
            let scale = 1.0 - settings.beta_avg;
            let grid_slack = scale * grid_disagreement(&policy, &refined);
            let span_estimate = scale * span_seminorm(&surrogate, &policy, None);

            let horizon = settings.horizon.unwrap_or(2000);
            let (mismatched, matched, gap, diagnostic) =
                paired_average_gap(model, mu, nu, &policy, horizon, settings.samples, settings.seed)?;

            Ok(RobustnessReport {
                criterion,
                measured_gap: gap.value,
                measured_gap_se: gap.std_error,
                cost_mismatched: mismatched.value,
                cost_mismatched_se: mismatched.std_error,
                cost_matched: matched.value,
                cost_matched_se: matched.std_error,
                continuity_bound: bound_continuity_average(model, mu, nu),
                prior_independent: None,
                span_estimate,
                grid_slack,
                alpha: contraction.alpha,
                tv_mu_nu: tv,
                decomposition: Vec::new(),
                truncation_bound: None,
                average_convergence_diagnostic: Some(diagnostic),
                evaluation_horizon: horizon,
                grid_resolution: settings.grid_resolution,
                refined_resolution,
                samples: settings.samples,
                seed: settings.seed,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn canonical_model() -> PomdpModel {
        PomdpModel::from_parts(
            2,
            2,
            2,
            0.9,
            vec![
                vec![vec![0.8, 0.2], vec![0.3, 0.7]],
                vec![vec![0.7, 0.3], vec![0.4, 0.6]],
            ],
            vec![vec![0.9, 0.1], vec![0.2, 0.8]],
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        )
        .unwrap()
    }

    fn small_settings() -> RobustnessSettings {
        RobustnessSettings {
            grid_resolution: 20,
            samples: 20_000,
            seed: 7,
            decomposition_times: vec![0, 3],
            ..RobustnessSettings::default()
        }
    }

    #[test]
    fn matched_priors_report_zero_gap() {
        let model = canonical_model();
        let mu = Belief::new(vec![0.7, 0.3]).unwrap();
        let report = robustness_gap(&model, &mu, &mu.clone(), Criterion::Discounted, &small_settings()).unwrap();
        assert_eq!(report.measured_gap, 0.0);
        assert_eq!(report.measured_gap_se, 0.0);
    }

    #[test]
    fn gap_is_nearly_nonnegative_and_bounded() {
        let model = canonical_model();
        let mu = Belief::new(vec![0.9, 0.1]).unwrap();
        let nu = Belief::new(vec![0.2, 0.8]).unwrap();
        let report = robustness_gap(&model, &mu, &nu, Criterion::Discounted, &small_settings()).unwrap();
        assert!(
            report.measured_gap >= -(2.0 * report.measured_gap_se + report.grid_slack),
            "gap {} se {} slack {}",
            report.measured_gap,
            report.measured_gap_se,
            report.grid_slack
        );
        assert!(
            report.measured_gap <= report.continuity_bound + 3.0 * report.measured_gap_se + report.grid_slack
        );
        let pi = report.prior_independent.expect("alpha in (0,1)");
        assert!(report.measured_gap <= pi.bound + 3.0 * report.measured_gap_se + report.grid_slack);
    }

    #[test]
    fn decomposition_terms_sum_to_the_gap_within_tolerance() {
        let model = canonical_model();
        let mu = Belief::new(vec![0.9, 0.1]).unwrap();
        let nu = Belief::new(vec![0.2, 0.8]).unwrap();
        let report = robustness_gap(&model, &mu, &nu, Criterion::Discounted, &small_settings()).unwrap();
        for d in &report.decomposition {
            let tolerance = 3.0 * (d.measured_gap_se + d.identity_residual_se) + report.grid_slack;
            assert!(
                (d.sum - d.measured_gap).abs() <= tolerance,
                "t {}: sum {} gap {} tol {}",
                d.time,
                d.sum,
                d.measured_gap,
                tolerance
            );
        }
    }

    #[test]
    fn average_criterion_fills_the_span_bound() {
        let model = canonical_model();
        let mu = Belief::new(vec![0.9, 0.1]).unwrap();
        let nu = Belief::new(vec![0.2, 0.8]).unwrap();
        let settings = RobustnessSettings {
            grid_resolution: 20,
            samples: 4000,
            seed: 3,
            horizon: Some(400),
            ..RobustnessSettings::default()
        };
        let report = robustness_gap(&model, &mu, &nu, Criterion::Average, &settings).unwrap();
        assert!(report.prior_independent.is_none());
        assert!(report.decomposition.is_empty());
        assert!(report.span_estimate >= 0.0);
        assert!(
            report.measured_gap <= report.span_estimate + 3.0 * report.measured_gap_se + report.grid_slack,
            "gap {} span {} se {} slack {}",
            report.measured_gap,
            report.span_estimate,
            report.measured_gap_se,
            report.grid_slack
        );
    }
}
