//! Cost evaluation under a (possibly) misspecified initial distribution.
//!
//! Every evaluator simulates the same coupled system: nature draws the
//! state path from the true prior, while the decision maker runs its
//! filter from the design prior and plays the grid policy's greedy action
//! at each filter realization. With matching priors this is ordinary
//! policy evaluation.

use super::solve::BeliefPolicy;
use super::ControlError;
use crate::filter::{measurement_update, sample_index, time_update, ENUMERATION_GUARD};
use crate::mc;
use crate::metrics::Estimate;
use crate::model::{absolutely_continuous, Belief, PomdpModel};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Default factor for choosing the truncation horizon: the neglected tail
/// is at most `factor * cost_sup / (1 - beta)`.
pub const DEFAULT_TRUNCATION_FACTOR: f64 = 1e-6;

/// Smallest horizon `H` with `beta^H <= factor`, so the discarded tail is
/// at most `factor * cost_sup / (1 - beta)`.
pub(crate) fn truncation_horizon(beta: f64, factor: f64) -> usize {
    if beta == 0.0 {
        return 1;
    }
    (factor.ln() / beta.ln()).ceil().max(1.0) as usize
}

fn truncation_bound(model: &PomdpModel, horizon: usize) -> f64 {
    if model.discount == 0.0 {
        return 0.0;
    }
    model.discount.powi(horizon as i32) * model.cost_sup() / (1.0 - model.discount)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostEstimate {
    pub value: f64,
    /// Zero for exact enumeration.
    pub std_error: f64,
    /// Number of stages actually evaluated.
    pub horizon: usize,
    /// Upper bound on the discarded discounted tail.
    pub truncation_bound: f64,
}

#[derive(Debug, Clone, Copy)]
pub enum DiscountedEvalMethod {
    /// Exact expectation over all observation sequences up to `horizon`
    /// stages. Only viable for short horizons.
    Enumerate { horizon: usize },
    /// Seeded Monte Carlo; `horizon` defaults to the truncation horizon
    /// for [`DEFAULT_TRUNCATION_FACTOR`].
    MonteCarlo {
        samples: usize,
        seed: u64,
        horizon: Option<usize>,
    },
}

fn check_priors(model: &PomdpModel, true_prior: &Belief, design_prior: &Belief) -> Result<(), ControlError> {
    if true_prior.len() != model.num_states || design_prior.len() != model.num_states {
        return Err(ControlError::InvalidDomain(format!(
            "prior dimension must be {}",
            model.num_states
        )));
    }
    if true_prior != design_prior && !absolutely_continuous(true_prior, design_prior) {
        return Err(ControlError::NotAbsolutelyContinuous);
    }
    Ok(())
}

/// Total discounted cost of running `policy` (designed around
/// `design_prior`) on a system whose state is really drawn from
/// `true_prior`.
pub fn evaluate_cost_discounted(
    model: &PomdpModel,
    true_prior: &Belief,
    design_prior: &Belief,
    policy: &BeliefPolicy,
    method: DiscountedEvalMethod,
) -> Result<CostEstimate, ControlError> {
    check_priors(model, true_prior, design_prior)?;
    match method {
        DiscountedEvalMethod::Enumerate { horizon } => {
            let leaves = (model.num_obs as u128).checked_pow(horizon as u32).unwrap_or(u128::MAX);
            if leaves > ENUMERATION_GUARD {
                return Err(ControlError::EnumerationTooLarge {
                    paths: leaves,
                    guard: ENUMERATION_GUARD,
                });
            }
            let mut total = 0.0;
            descend_cost(
                model,
                policy,
                true_prior.probs().to_vec(),
                design_prior.clone(),
                0,
                horizon,
                1.0,
                &mut total,
            )?;
            Ok(CostEstimate {
                value: total,
                std_error: 0.0,
                horizon,
                truncation_bound: truncation_bound(model, horizon),
            })
        }
        DiscountedEvalMethod::MonteCarlo {
            samples,
            seed,
            horizon,
        } => {
            let horizon = horizon.unwrap_or_else(|| truncation_horizon(model.discount, DEFAULT_TRUNCATION_FACTOR));
            let moments = mc::run_chunked(samples, seed, 1, |rng, out| -> Result<(), ControlError> {
                let run = simulate_discounted(model, true_prior, design_prior, policy, horizon, &[], rng)?;
                out[0] = run.total;
                Ok(())
            })?;
            Ok(CostEstimate {
                value: moments.mean(0),
                std_error: moments.std_error(0),
                horizon,
                truncation_bound: truncation_bound(model, horizon),
            })
        }
    }
}

/// Exact expectation by depth-first walk over observation prefixes.
/// `alpha_true[x]` is the unnormalized joint `P(x_i, y_{0..i-1})` under the
/// true prior; the decision maker's predictor rides along normalized.
#[allow(clippy::too_many_arguments)]
fn descend_cost(
    model: &PomdpModel,
    policy: &BeliefPolicy,
    alpha_true: Vec<f64>,
    dm_predictor: Belief,
    stage: usize,
    horizon: usize,
    discount: f64,
    total: &mut f64,
) -> Result<(), ControlError> {
    if stage == horizon {
        return Ok(());
    }
    for y in 0..model.num_obs {
        let mut post_true = vec![0.0; model.num_states];
        let mut weight = 0.0;
        for x in 0..model.num_states {
            let w = alpha_true[x] * model.observation[x][y];
            post_true[x] = w;
            weight += w;
        }
        if weight == 0.0 {
            continue;
        }
        let dm_filter = measurement_update(model, &dm_predictor, y)?;
        let u = policy.action(dm_filter.probs());
        let stage_cost: f64 = post_true.iter().enumerate().map(|(x, &w)| w * model.stage_cost(x, u)).sum();
        *total += discount * stage_cost;

        let mut next_alpha = vec![0.0; model.num_states];
        for (x, &w) in post_true.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (xn, &t) in model.transition_row(u, x).iter().enumerate() {
                next_alpha[xn] += w * t;
            }
        }
        let next_dm = time_update(model, &dm_filter, u);
        descend_cost(
            model,
            policy,
            next_alpha,
            next_dm,
            stage + 1,
            horizon,
            discount * model.discount,
            total,
        )?;
    }
    Ok(())
}

/// Per-trajectory outcome of one coupled simulation.
struct SimRun {
    /// Discounted cost over the whole horizon.
    total: f64,
    /// At each requested time `t`: discounted cost of stages `< t`.
    head: Vec<f64>,
    /// At each requested time `t`: grid estimate of the optimal cost
    /// restarting from the true predictor.
    value_at_true_predictor: Vec<f64>,
}

/// Runs one trajectory: true state from `true_prior`, decision maker's
/// filter from `design_prior`, actions greedy under `policy`. `times` must
/// be sorted; at each listed time the pre-measurement snapshot is recorded.
fn simulate_discounted(
    model: &PomdpModel,
    true_prior: &Belief,
    design_prior: &Belief,
    policy: &BeliefPolicy,
    horizon: usize,
    times: &[usize],
    rng: &mut ChaCha8Rng,
) -> Result<SimRun, ControlError> {
    let mut head = Vec::with_capacity(times.len());
    let mut value_at_true_predictor = Vec::with_capacity(times.len());
    let mut next_time = 0usize;

    let mut x = sample_index(rng, true_prior.probs());
    let mut dm_pred = design_prior.clone();
    let mut true_pred = true_prior.clone();
    let mut total = 0.0;
    let mut discount = 1.0;
    for stage in 0..horizon {
        while next_time < times.len() && times[next_time] == stage {
            head.push(total);
            value_at_true_predictor.push(policy.prior_value(model, true_pred.probs()));
            next_time += 1;
        }
        let y = sample_index(rng, model.observation_row(x));
        let dm_filter = measurement_update(model, &dm_pred, y)?;
        let true_filter = measurement_update(model, &true_pred, y)?;
        let u = policy.action(dm_filter.probs());
        total += discount * model.stage_cost(x, u);
        discount *= model.discount;
        dm_pred = time_update(model, &dm_filter, u);
        true_pred = time_update(model, &true_filter, u);
        x = sample_index(rng, model.transition_row(u, x));
    }
    while next_time < times.len() && times[next_time] == horizon {
        head.push(total);
        value_at_true_predictor.push(policy.prior_value(model, true_pred.probs()));
        next_time += 1;
    }
    debug_assert_eq!(head.len(), times.len(), "times must be sorted and <= horizon");

    Ok(SimRun {
        total,
        head,
        value_at_true_predictor,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AverageCostEstimate {
    pub value: f64,
    pub std_error: f64,
    /// Horizon used for the time average.
    pub horizon: usize,
    /// Absolute difference between the full-horizon and half-horizon
    /// averages; small values indicate the average has settled.
    pub convergence_diagnostic: f64,
}

/// Time-averaged cost `(1/T) sum_{i<T} c(X_i, U_i)` under the coupled
/// simulation, with the half-horizon average as a convergence diagnostic.
pub fn evaluate_cost_average(
    model: &PomdpModel,
    true_prior: &Belief,
    design_prior: &Belief,
    policy: &BeliefPolicy,
    horizon: usize,
    samples: usize,
    seed: u64,
) -> Result<AverageCostEstimate, ControlError> {
    check_priors(model, true_prior, design_prior)?;
    if horizon < 2 {
        return Err(ControlError::InvalidDomain("average-cost horizon must be at least 2".into()));
    }
    let half = horizon / 2;
    let moments = mc::run_chunked(samples, seed, 2, |rng, out| -> Result<(), ControlError> {
        let (full_sum, half_sum) = simulate_average(model, true_prior, design_prior, policy, horizon, half, rng)?;
        out[0] = full_sum / horizon as f64;
        out[1] = half_sum / half as f64;
        Ok(())
    })?;
    Ok(AverageCostEstimate {
        value: moments.mean(0),
        std_error: moments.std_error(0),
        horizon,
        convergence_diagnostic: (moments.mean(0) - moments.mean(1)).abs(),
    })
}

fn simulate_average(
    model: &PomdpModel,
    true_prior: &Belief,
    design_prior: &Belief,
    policy: &BeliefPolicy,
    horizon: usize,
    half: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, f64), ControlError> {
    let mut x = sample_index(rng, true_prior.probs());
    let mut dm_pred = design_prior.clone();
    let mut sum = 0.0;
    let mut half_sum = 0.0;
    for stage in 0..horizon {
        if stage == half {
            half_sum = sum;
        }
        let y = sample_index(rng, model.observation_row(x));
        let dm_filter = measurement_update(model, &dm_pred, y)?;
        let u = policy.action(dm_filter.probs());
        sum += model.stage_cost(x, u);
        dm_pred = time_update(model, &dm_filter, u);
        x = sample_index(rng, model.transition_row(u, x));
    }
    Ok((sum, half_sum))
}

/// The mismatch gap at one reference time, split into the cost of early
/// decisions, the cost of arriving in a different belief, and the cost of
/// continuing to act on a filter that has not yet merged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostDecomposition {
    pub time: usize,
    /// Difference of discounted costs over stages before `time`.
    pub transient: f64,
    pub transient_se: f64,
    /// Discounted difference of solved values at the true predictors
    /// reached at `time` under the mismatched and matched runs.
    pub strategic: f64,
    pub strategic_se: f64,
    /// Discounted excess of the mismatched tail cost over the solved value
    /// at the true predictor it restarts from.
    pub approximation: f64,
    pub approximation_se: f64,
    /// `transient + strategic + approximation`.
    pub sum: f64,
    pub measured_gap: f64,
    pub measured_gap_se: f64,
    /// `sum - measured_gap`; vanishes up to Monte Carlo noise and grid
    /// projection error.
    pub identity_residual: f64,
    pub identity_residual_se: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct DecompositionSettings {
    pub samples: usize,
    pub seed: u64,
    /// Evaluation horizon; defaults to the truncation horizon.
    pub horizon: Option<usize>,
}

/// Paired outcome of the mismatched and matched evaluations.
#[derive(Debug, Clone)]
pub(crate) struct MismatchOutcome {
    pub cost_mismatched: Estimate,
    pub cost_matched: Estimate,
    pub gap: Estimate,
    pub decomposition: Vec<CostDecomposition>,
    pub horizon: usize,
    pub truncation_bound: f64,
}

/// Runs the mismatched (`design = nu`) and matched (`design = mu`)
/// evaluations on common random numbers and splits the gap at each
/// requested time.
pub(crate) fn mismatch_decomposition(
    model: &PomdpModel,
    mu: &Belief,
    nu: &Belief,
    policy: &BeliefPolicy,
    times: &[usize],
    settings: DecompositionSettings,
) -> Result<MismatchOutcome, ControlError> {
    check_priors(model, mu, nu)?;
    let horizon = settings
        .horizon
        .unwrap_or_else(|| truncation_horizon(model.discount, DEFAULT_TRUNCATION_FACTOR));
    if times.windows(2).any(|w| w[0] >= w[1]) || times.iter().any(|&t| t > horizon) {
        return Err(ControlError::InvalidDomain(format!(
            "decomposition times must be strictly increasing and at most the horizon {horizon}"
        )));
    }

    // Per-sample layout: total_mis, total_mat, gap, then per time
    // (transient, strategic, approximation, identity residual).
    let dim = 3 + 4 * times.len();
    let beta = model.discount;
    let moments = mc::run_chunked(settings.samples, settings.seed, dim, |rng, out| -> Result<(), ControlError> {
        let mut matched_rng = rng.clone();
        let mis = simulate_discounted(model, mu, nu, policy, horizon, times, rng)?;
        let mat = simulate_discounted(model, mu, mu, policy, horizon, times, &mut matched_rng)?;
        out[0] = mis.total;
        out[1] = mat.total;
        out[2] = mis.total - mat.total;
        for (k, &t) in times.iter().enumerate() {
            let scale = beta.powi(t as i32);
            let transient = mis.head[k] - mat.head[k];
            let strategic = scale * (mis.value_at_true_predictor[k] - mat.value_at_true_predictor[k]);
            let approximation = mis.total - mis.head[k] - scale * mis.value_at_true_predictor[k];
            let residual = mat.total - mat.head[k] - scale * mat.value_at_true_predictor[k];
            let base = 3 + 4 * k;
            out[base] = transient;
            out[base + 1] = strategic;
            out[base + 2] = approximation;
            out[base + 3] = residual;
        }
        Ok(())
    })?;

    let decomposition = times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let base = 3 + 4 * k;
            let transient = moments.mean(base);
            let strategic = moments.mean(base + 1);
            let approximation = moments.mean(base + 2);
            CostDecomposition {
                time: t,
                transient,
                transient_se: moments.std_error(base),
                strategic,
                strategic_se: moments.std_error(base + 1),
                approximation,
                approximation_se: moments.std_error(base + 2),
                sum: transient + strategic + approximation,
                measured_gap: moments.mean(2),
                measured_gap_se: moments.std_error(2),
                identity_residual: moments.mean(base + 3),
                identity_residual_se: moments.std_error(base + 3),
            }
        })
        .collect();

    Ok(MismatchOutcome {
        cost_mismatched: Estimate {
            value: moments.mean(0),
            std_error: moments.std_error(0),
        },
        cost_matched: Estimate {
            value: moments.mean(1),
            std_error: moments.std_error(1),
        },
        gap: Estimate {
            value: moments.mean(2),
            std_error: moments.std_error(2),
        },
        decomposition,
        horizon,
        truncation_bound: truncation_bound(model, horizon),
    })
}

/// Splits the mismatch gap at each time in `times` (sorted, distinct).
pub fn cost_decomposition(
    model: &PomdpModel,
    mu: &Belief,
    nu: &Belief,
    policy: &BeliefPolicy,
    times: &[usize],
    settings: DecompositionSettings,
) -> Result<Vec<CostDecomposition>, ControlError> {
    Ok(mismatch_decomposition(model, mu, nu, policy, times, settings)?.decomposition)
}

/// Paired average-cost evaluation on common random numbers.
pub(crate) fn paired_average_gap(
    model: &PomdpModel,
    mu: &Belief,
    nu: &Belief,
    policy: &BeliefPolicy,
    horizon: usize,
    samples: usize,
    seed: u64,
) -> Result<(Estimate, Estimate, Estimate, f64), ControlError> {
    check_priors(model, mu, nu)?;
    if horizon < 2 {
        return Err(ControlError::InvalidDomain("average-cost horizon must be at least 2".into()));
    }
    let half = horizon / 2;
    let moments = mc::run_chunked(samples, seed, 4, |rng, out| -> Result<(), ControlError> {
        let mut matched_rng = rng.clone();
        let (mis_sum, mis_half) = simulate_average(model, mu, nu, policy, horizon, half, rng)?;
        let (mat_sum, _) = simulate_average(model, mu, mu, policy, horizon, half, &mut matched_rng)?;
        out[0] = mis_sum / horizon as f64;
        out[1] = mat_sum / horizon as f64;
        out[2] = out[0] - out[1];
        out[3] = mis_half / half as f64;
        Ok(())
    })?;
    let mismatched = Estimate {
        value: moments.mean(0),
        std_error: moments.std_error(0),
    };
    let matched = Estimate {
        value: moments.mean(1),
        std_error: moments.std_error(1),
    };
    let gap = Estimate {
        value: moments.mean(2),
        std_error: moments.std_error(2),
    };
    let diagnostic = (moments.mean(0) - moments.mean(3)).abs();
    Ok((mismatched, matched, gap, diagnostic))
}
