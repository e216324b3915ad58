//! Distances and divergences between beliefs, expected filter discrepancy
//! under a common policy, and an exact two-route identity check for the
//! expected predictor discrepancy on enumerable models.

use crate::filter::{
    measurement_update, sample_index, time_update, FilterError, ENUMERATION_GUARD,
};
use crate::mc;
use crate::model::{absolutely_continuous, Belief, PomdpModel};
use crate::policy::{Policy, PolicyCursor};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("belief lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("true prior is not absolutely continuous with respect to the design prior")]
    NotAbsolutelyContinuous,
    #[error(transparent)]
    Filter(#[from] FilterError),
}

/// Which divergence a value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergenceKind {
    TotalVariation,
    RelativeEntropy,
    WeakSurrogate,
}

/// A labeled divergence value. Total variation and the weak surrogate lie
/// in `[0, 2]`; relative entropy is non-negative and may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DivergenceValue {
    pub kind: DivergenceKind,
    pub value: f64,
}

impl DivergenceValue {
    pub fn total_variation(p: &Belief, q: &Belief) -> Result<Self, MetricsError> {
        Ok(Self {
            kind: DivergenceKind::TotalVariation,
            value: tv_distance(p, q)?,
        })
    }

    pub fn relative_entropy(p: &Belief, q: &Belief) -> Result<Self, MetricsError> {
        Ok(Self {
            kind: DivergenceKind::RelativeEntropy,
            value: relative_entropy(p, q)?,
        })
    }
}

#[inline]
pub(crate) fn tv_slice(p: &[f64], q: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum()
}

/// Total variation distance `sum_x |p(x) - q(x)|`, the sup over test
/// functions bounded by 1 of the difference of expectations; lies in `[0, 2]`.
pub fn tv_distance(p: &Belief, q: &Belief) -> Result<f64, MetricsError> {
    if p.len() != q.len() {
        return Err(MetricsError::LengthMismatch(p.len(), q.len()));
    }
    Ok(tv_slice(p.probs(), q.probs()))
}

/// Relative entropy `sum_x p(x) ln(p(x)/q(x))` in nats, with the
/// conventions `0 ln(0/q) = 0` and `+inf` when `p` is not absolutely
/// continuous with respect to `q`.
pub fn relative_entropy(p: &Belief, q: &Belief) -> Result<f64, MetricsError> {
    if p.len() != q.len() {
        return Err(MetricsError::LengthMismatch(p.len(), q.len()));
    }
    let mut total = 0.0;
    for (&pi, &qi) in p.probs().iter().zip(q.probs()) {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return Ok(f64::INFINITY);
        }
        total += pi * (pi / qi).ln();
    }
    // Rounding can nudge the sum for nearly identical vectors below zero.
    Ok(total.max(0.0))
}

/// Largest discrepancy `|sum_x f(x)(p(x) - q(x))|` over a family of test
/// functions with sup norm at most 1. Always dominated by [`tv_distance`].
pub fn weak_surrogate(p: &Belief, q: &Belief, test_functions: &[Vec<f64>]) -> Result<f64, MetricsError> {
    if p.len() != q.len() {
        return Err(MetricsError::LengthMismatch(p.len(), q.len()));
    }
    let mut worst = 0.0f64;
    for f in test_functions {
        debug_assert_eq!(f.len(), p.len(), "test function has wrong dimension");
        debug_assert!(
            f.iter().all(|v| v.abs() <= 1.0 + 1e-12),
            "test functions must be bounded by 1 in sup norm"
        );
        let gap: f64 = f
            .iter()
            .zip(p.probs().iter().zip(q.probs()))
            .map(|(&fx, (&px, &qx))| fx * (px - qx))
            .sum();
        worst = worst.max(gap.abs());
    }
    Ok(worst)
}

/// Default test family: every coordinate indicator plus the index identity
/// rescaled to `[-1, 1]`. On a finite space this family separates measures,
/// so vanishing surrogate distance is equivalent to vanishing total
/// variation.
pub fn default_test_family(num_states: usize) -> Vec<Vec<f64>> {
    let mut family = Vec::with_capacity(num_states + 1);
    for x in 0..num_states {
        let mut indicator = vec![0.0; num_states];
        indicator[x] = 1.0;
        family.push(indicator);
    }
    let scaled = (0..num_states)
        .map(|x| {
            if num_states == 1 {
                0.0
            } else {
                2.0 * x as f64 / (num_states - 1) as f64 - 1.0
            }
        })
        .collect();
    family.push(scaled);
    family
}

/// How to estimate a path-space expectation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMethod {
    /// Exact sum over all observation sequences (zero standard error).
    Enumerate,
    /// Seeded, partition-deterministic Monte Carlo.
    MonteCarlo { samples: usize, seed: u64 },
}

/// A point estimate with its standard error (0 for exact enumeration).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

/// Expected divergence between the correctly and incorrectly initialized
/// filters at one time step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DivergenceTracePoint {
    pub n: usize,
    pub e_tv: f64,
    pub e_tv_se: f64,
    /// Expected relative entropy between the two filters in nats.
    pub e_relative_entropy: f64,
    pub e_relative_entropy_se: f64,
}

/// Per-step expected filter discrepancies `E[ ||pi_n(mu) - pi_n(nu)|| ]`
/// for `n = 0..=horizon`, where both filters consume the same observation
/// and action sequence and expectations are under the true-prior path law.
///
/// Requires `mu` absolutely continuous with respect to `nu`, which
/// guarantees the `nu`-filter never meets a zero-likelihood observation on
/// a positive-probability path.
pub fn filter_divergence_trace<P: Policy>(
    model: &PomdpModel,
    mu: &Belief,
    nu: &Belief,
    policy: &P,
    horizon: usize,
    method: EstimateMethod,
) -> Result<Vec<DivergenceTracePoint>, MetricsError> {
    if mu.len() != nu.len() {
        return Err(MetricsError::LengthMismatch(mu.len(), nu.len()));
    }
    if !absolutely_continuous(mu, nu) {
        return Err(MetricsError::NotAbsolutelyContinuous);
    }
    match method {
        EstimateMethod::Enumerate => enumerate_trace(model, mu, nu, policy, horizon),
        EstimateMethod::MonteCarlo { samples, seed } => {
            monte_carlo_trace(model, mu, nu, policy, horizon, samples, seed)
        }
    }
}

/// Expected filter total variation at a single time step.
pub fn expected_filter_tv<P: Policy>(
    model: &PomdpModel,
    mu: &Belief,
    nu: &Belief,
    policy: &P,
    n: usize,
    method: EstimateMethod,
) -> Result<Estimate, MetricsError> {
    let trace = filter_divergence_trace(model, mu, nu, policy, n, method)?;
    let point = trace[n];
    Ok(Estimate {
        value: point.e_tv,
        std_error: point.e_tv_se,
    })
}

fn enumerate_trace<P: Policy>(
    model: &PomdpModel,
    mu: &Belief,
    nu: &Belief,
    policy: &P,
    horizon: usize,
) -> Result<Vec<DivergenceTracePoint>, MetricsError> {
    let leaves = (model.num_obs as u128).checked_pow(horizon as u32 + 1).unwrap_or(u128::MAX);
    if leaves > ENUMERATION_GUARD {
        return Err(FilterError::EnumerationTooLarge {
            paths: leaves,
            guard: ENUMERATION_GUARD,
        }
        .into());
    }

    let mut e_tv = vec![0.0f64; horizon + 1];
    let mut e_re = vec![0.0f64; horizon + 1];
    // Forward variables: alpha[x] = P(prefix observations, X_k = x).
    let alpha_mu: Vec<f64> = mu.probs().to_vec();
    let alpha_nu: Vec<f64> = nu.probs().to_vec();
    descend_trace(
        model,
        policy.start(),
        &alpha_mu,
        &alpha_nu,
        0,
        horizon,
        &mut e_tv,
        &mut e_re,
    )?;

    Ok((0..=horizon)
        .map(|n| DivergenceTracePoint {
            n,
            e_tv: e_tv[n],
            e_tv_se: 0.0,
            e_relative_entropy: e_re[n],
            e_relative_entropy_se: 0.0,
        })
        .collect())
}

/// Depth-first walk over observation prefixes. The incoming alphas are
/// predictor-stage joints (before the measurement at depth `k`).
#[allow(clippy::too_many_arguments)]
fn descend_trace<C: PolicyCursor>(
    model: &PomdpModel,
    cursor: C,
    alpha_mu: &[f64],
    alpha_nu: &[f64],
    k: usize,
    horizon: usize,
    e_tv: &mut [f64],
    e_re: &mut [f64],
) -> Result<(), MetricsError> {
    for y in 0..model.num_obs {
        let post_mu: Vec<f64> = (0..model.num_states).map(|x| alpha_mu[x] * model.observation[x][y]).collect();
        let weight_mu: f64 = post_mu.iter().sum();
        if weight_mu == 0.0 {
            // Zero probability under the true prior: contributes nothing.
            continue;
        }
        let post_nu: Vec<f64> = (0..model.num_states).map(|x| alpha_nu[x] * model.observation[x][y]).collect();
        let weight_nu: f64 = post_nu.iter().sum();
        debug_assert!(weight_nu > 0.0, "absolute continuity violated during enumeration");

        let filt_mu: Vec<f64> = post_mu.iter().map(|w| w / weight_mu).collect();
        let filt_nu: Vec<f64> = post_nu.iter().map(|w| w / weight_nu).collect();
        e_tv[k] += weight_mu * tv_slice(&filt_mu, &filt_nu);
        e_re[k] += weight_mu * re_slice(&filt_mu, &filt_nu);

        if k < horizon {
            let mut next_cursor = cursor.clone();
            let u = next_cursor.act(y)?;
            let pred_mu = push_forward(model, &post_mu, u);
            let pred_nu = push_forward(model, &post_nu, u);
            descend_trace(model, next_cursor, &pred_mu, &pred_nu, k + 1, horizon, e_tv, e_re)?;
        }
    }
    Ok(())
}

fn push_forward(model: &PomdpModel, weights: &[f64], u: usize) -> Vec<f64> {
    let mut next = vec![0.0; model.num_states];
    for (x, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        for (xn, &t) in model.transition[u][x].iter().enumerate() {
            next[xn] += w * t;
        }
    }
    next
}

fn re_slice(p: &[f64], q: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return f64::INFINITY;
        }
        total += pi * (pi / qi).ln();
    }
    total.max(0.0)
}

fn monte_carlo_trace<P: Policy>(
    model: &PomdpModel,
    mu: &Belief,
    nu: &Belief,
    policy: &P,
    horizon: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<DivergenceTracePoint>, MetricsError> {
    let steps = horizon + 1;
    let moments = mc::run_chunked(samples, seed, 2 * steps, |rng, out| -> Result<(), MetricsError> {
        let mut cursor = policy.start();
        let mut x = sample_index(rng, mu.probs());
        let mut pred_mu = mu.clone();
        let mut pred_nu = nu.clone();
        for k in 0..=horizon {
            let y = sample_index(rng, model.observation_row(x));
            let filt_mu = measurement_update(model, &pred_mu, y)?;
            let filt_nu = measurement_update(model, &pred_nu, y)?;
            out[k] = tv_slice(filt_mu.probs(), filt_nu.probs());
            out[steps + k] = re_slice(filt_mu.probs(), filt_nu.probs());
            if k < horizon {
                let u = cursor.act(y)?;
                pred_mu = time_update(model, &filt_mu, u);
                pred_nu = time_update(model, &filt_nu, u);
                x = sample_index(rng, model.transition_row(u, x));
            }
        }
        Ok(())
    })?;

    Ok((0..=horizon)
        .map(|n| DivergenceTracePoint {
            n,
            e_tv: moments.mean(n),
            e_tv_se: moments.std_error(n),
            e_relative_entropy: moments.mean(steps + n),
            e_relative_entropy_se: moments.std_error(steps + n),
        })
        .collect())
}

/// Two independent evaluations of the expected predictor discrepancy at
/// time `n`, plus their gap.
///
/// `lhs` enumerates observation prefixes and averages the predictor total
/// variation under the true-prior path law. `rhs` enumerates joint state
/// paths under the design-prior path law and averages the conditional-mean
/// discrepancy of the prior likelihood ratio given `(Y_{0..n-1}, X_n)`
/// versus given `Y_{0..n-1}` alone. The two agree exactly on finite models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MartingaleCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

pub fn tv_martingale_identity_check<P: Policy>(
    model: &PomdpModel,
    mu: &Belief,
    nu: &Belief,
    policy: &P,
    n: usize,
) -> Result<MartingaleCheck, MetricsError> {
    if mu.len() != nu.len() {
        return Err(MetricsError::LengthMismatch(mu.len(), nu.len()));
    }
    if !absolutely_continuous(mu, nu) {
        return Err(MetricsError::NotAbsolutelyContinuous);
    }
    let joint = (model.num_states as u128)
        .checked_pow(n as u32 + 1)
        .and_then(|s| (model.num_obs as u128).checked_pow(n as u32).map(|o| s.saturating_mul(o)))
        .unwrap_or(u128::MAX);
    if joint > ENUMERATION_GUARD {
        return Err(FilterError::EnumerationTooLarge {
            paths: joint,
            guard: ENUMERATION_GUARD,
        }
        .into());
    }

    let lhs = predictor_tv_by_prefix_enumeration(model, mu, nu, policy, n)?;
    let rhs = likelihood_ratio_route(model, mu, nu, policy, n)?;
    Ok(MartingaleCheck {
        lhs,
        rhs,
        gap: (lhs - rhs).abs(),
    })
}

/// Route one: expected total variation between the two predictors at time
/// `n`, summing over the observation prefix `y_{0..n-1}`.
fn predictor_tv_by_prefix_enumeration<P: Policy>(
    model: &PomdpModel,
    mu: &Belief,
    nu: &Belief,
    policy: &P,
    n: usize,
) -> Result<f64, MetricsError> {
    if n == 0 {
        return Ok(tv_slice(mu.probs(), nu.probs()));
    }
    let mut total = 0.0;
    let mut prefix = vec![0usize; n];
    'outer: loop {
        // Walk this prefix with the recursion under both priors.
        let mut cursor = policy.start();
        let mut alpha_mu = mu.probs().to_vec();
        let mut alpha_nu = nu.probs().to_vec();
        let mut dead = false;
        for &y in &prefix {
            for x in 0..model.num_states {
                alpha_mu[x] *= model.observation[x][y];
                alpha_nu[x] *= model.observation[x][y];
            }
            if alpha_mu.iter().sum::<f64>() == 0.0 {
                dead = true;
                break;
            }
            let u = cursor.act(y)?;
            alpha_mu = push_forward(model, &alpha_mu, u);
            alpha_nu = push_forward(model, &alpha_nu, u);
        }
        if !dead {
            let weight_mu: f64 = alpha_mu.iter().sum();
            if weight_mu > 0.0 {
                let weight_nu: f64 = alpha_nu.iter().sum();
                debug_assert!(weight_nu > 0.0);
                let pred_mu: Vec<f64> = alpha_mu.iter().map(|w| w / weight_mu).collect();
                let pred_nu: Vec<f64> = alpha_nu.iter().map(|w| w / weight_nu).collect();
                total += weight_mu * tv_slice(&pred_mu, &pred_nu);
            }
        }
        // Next observation prefix.
        let mut k = n;
        loop {
            if k == 0 {
                break 'outer;
            }
            k -= 1;
            prefix[k] += 1;
            if prefix[k] < model.num_obs {
                break;
            }
            prefix[k] = 0;
        }
    }
    Ok(total)
}

/// Route two: joint enumeration of `(x_{0..n}, y_{0..n-1})` under the
/// design prior. For each prefix, `ratio_mass[x_n]` accumulates path weight
/// times the prior likelihood ratio at `x_0` and `mass[x_n]` the plain
/// path weight; conditional means are their quotients.
fn likelihood_ratio_route<P: Policy>(
    model: &PomdpModel,
    mu: &Belief,
    nu: &Belief,
    policy: &P,
    n: usize,
) -> Result<f64, MetricsError> {
    if n == 0 {
        let mut total = 0.0;
        for x in 0..model.num_states {
            if nu[x] > 0.0 {
                total += nu[x] * (mu[x] / nu[x] - 1.0).abs();
            }
        }
        return Ok(total);
    }

    let mut total = 0.0;
    let mut prefix = vec![0usize; n];
    'outer: loop {
        let mut cursor = policy.start();
        let mut actions = Vec::with_capacity(n);
        for &y in &prefix {
            actions.push(cursor.act(y)?);
        }

        let mut mass = vec![0.0f64; model.num_states];
        let mut ratio_mass = vec![0.0f64; model.num_states];
        for x0 in 0..model.num_states {
            if nu[x0] == 0.0 {
                continue;
            }
            let ratio = mu[x0] / nu[x0];
            walk_ratio_paths(model, &prefix, &actions, 0, x0, nu[x0], ratio, &mut mass, &mut ratio_mass);
        }

        let mass_total: f64 = mass.iter().sum();
        if mass_total > 0.0 {
            let ratio_total: f64 = ratio_mass.iter().sum();
            let prefix_mean = ratio_total / mass_total;
            for x in 0..model.num_states {
                if mass[x] > 0.0 {
                    total += mass[x] * (ratio_mass[x] / mass[x] - prefix_mean).abs();
                }
            }
        }

        let mut k = n;
        loop {
            if k == 0 {
                break 'outer;
            }
            k -= 1;
            prefix[k] += 1;
            if prefix[k] < model.num_obs {
                break;
            }
            prefix[k] = 0;
        }
    }
    Ok(total)
}

/// Recursively extends a state path: at depth `k < n` the state emits
/// `prefix[k]` and transitions under `actions[k]`; depth `n` terminates
/// without emitting (the last observation is not conditioned on).
#[allow(clippy::too_many_arguments)]
fn walk_ratio_paths(
    model: &PomdpModel,
    prefix: &[usize],
    actions: &[usize],
    k: usize,
    x: usize,
    weight: f64,
    ratio: f64,
    mass: &mut [f64],
    ratio_mass: &mut [f64],
) {
    if weight == 0.0 {
        return;
    }
    if k == prefix.len() {
        mass[x] += weight;
        ratio_mass[x] += weight * ratio;
        return;
    }
    let w_obs = weight * model.observation[x][prefix[k]];
    if w_obs == 0.0 {
        return;
    }
    for (xn, &t) in model.transition[actions[k]][x].iter().enumerate() {
        walk_ratio_paths(model, prefix, actions, k + 1, xn, w_obs * t, ratio, mass, ratio_mass);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::{FixedActionPolicy, HashRandomPolicy};
    use proptest::prelude::*;

    fn b(v: Vec<f64>) -> Belief {
        Belief::new(v).unwrap()
    }

    fn mixing_model() -> PomdpModel {
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

    fn frozen_model() -> PomdpModel {
        PomdpModel::from_parts(
            2,
            2,
            1,
            0.9,
            vec![vec![vec![1.0, 0.0], vec![0.0, 1.0]]],
            vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            vec![vec![0.0], vec![1.0]],
        )
        .unwrap()
    }

    #[test]
    fn tv_examples() {
        assert_eq!(tv_distance(&b(vec![0.5, 0.5]), &b(vec![0.5, 0.5])).unwrap(), 0.0);
        assert_eq!(tv_distance(&b(vec![1.0, 0.0]), &b(vec![0.0, 1.0])).unwrap(), 2.0);
        assert!((tv_distance(&b(vec![0.7, 0.3]), &b(vec![0.4, 0.6])).unwrap() - 0.6).abs() < 1e-15);
        assert!(tv_distance(&b(vec![0.5, 0.5]), &b(vec![0.25, 0.25, 0.5])).is_err());
    }

    #[test]
    fn relative_entropy_examples() {
        assert_eq!(relative_entropy(&b(vec![0.3, 0.7]), &b(vec![0.3, 0.7])).unwrap(), 0.0);
        let kl = relative_entropy(&b(vec![1.0, 0.0]), &b(vec![0.5, 0.5])).unwrap();
        assert!((kl - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(
            relative_entropy(&b(vec![0.5, 0.5]), &b(vec![1.0, 0.0])).unwrap(),
            f64::INFINITY
        );
    }

    #[test]
    fn weak_surrogate_examples() {
        let constant = vec![vec![1.0, 1.0]];
        let seen_by_constant = weak_surrogate(&b(vec![0.9, 0.1]), &b(vec![0.2, 0.8]), &constant).unwrap();
        assert!(seen_by_constant < 1e-15, "constants see no difference: {seen_by_constant}");
        let family = default_test_family(2);
        assert_eq!(
            weak_surrogate(&b(vec![1.0, 0.0]), &b(vec![0.0, 1.0]), &family[..1]).unwrap(),
            1.0
        );
    }

    proptest! {
        #[test]
        fn surrogate_never_exceeds_tv(raw_p in proptest::collection::vec(0.0f64..1.0, 3), raw_q in proptest::collection::vec(0.0f64..1.0, 3)) {
            let sp: f64 = raw_p.iter().sum();
            let sq: f64 = raw_q.iter().sum();
            prop_assume!(sp > 1e-3 && sq > 1e-3);
            let p = Belief::from_weights(raw_p).unwrap();
            let q = Belief::from_weights(raw_q).unwrap();
            let family = default_test_family(3);
            let weak = weak_surrogate(&p, &q, &family).unwrap();
            let tv = tv_distance(&p, &q).unwrap();
            prop_assert!(weak <= tv + 1e-12);
        }

        #[test]
        fn pinsker_holds(raw_p in proptest::collection::vec(0.0f64..1.0, 4), raw_q in proptest::collection::vec(0.0f64..1.0, 4)) {
            let sp: f64 = raw_p.iter().sum();
            let sq: f64 = raw_q.iter().sum();
            prop_assume!(sp > 1e-3 && sq > 1e-3);
            let p = Belief::from_weights(raw_p).unwrap();
            let q = Belief::from_weights(raw_q).unwrap();
            let tv = tv_distance(&p, &q).unwrap();
            let kl = relative_entropy(&p, &q).unwrap();
            prop_assert!(tv <= (2.0 * kl).sqrt() + 1e-12);
        }
    }

    #[test]
    fn identical_priors_give_zero_trace() {
        let model = mixing_model();
        let mu = b(vec![0.6, 0.4]);
        let trace = filter_divergence_trace(
            &model,
            &mu,
            &mu.clone(),
            &FixedActionPolicy { action: 0 },
            4,
            EstimateMethod::Enumerate,
        )
        .unwrap();
        for point in trace {
            assert_eq!(point.e_tv, 0.0);
            assert_eq!(point.e_relative_entropy, 0.0);
        }
    }

    #[test]
    fn frozen_model_trace_equals_prior_tv() {
        let model = frozen_model();
        let mu = b(vec![0.25, 0.75]);
        let nu = b(vec![0.75, 0.25]);
        let tv = tv_distance(&mu, &nu).unwrap();
        let trace = filter_divergence_trace(
            &model,
            &mu,
            &nu,
            &FixedActionPolicy { action: 0 },
            6,
            EstimateMethod::Enumerate,
        )
        .unwrap();
        for point in trace {
            assert_eq!(point.e_tv, tv, "n = {}", point.n);
        }
    }

    #[test]
    fn monte_carlo_matches_enumeration_within_three_ses() {
        let model = mixing_model();
        let mu = b(vec![0.9, 0.1]);
        let nu = b(vec![0.2, 0.8]);
        let policy = HashRandomPolicy::new(5, 2);
        let exact = expected_filter_tv(&model, &mu, &nu, &policy, 1, EstimateMethod::Enumerate).unwrap();
        let mc = expected_filter_tv(
            &model,
            &mu,
            &nu,
            &policy,
            1,
            EstimateMethod::MonteCarlo {
                samples: 100_000,
                seed: 11,
            },
        )
        .unwrap();
        assert!(
            (mc.value - exact.value).abs() <= 3.0 * mc.std_error,
            "mc {} exact {} se {}",
            mc.value,
            exact.value,
            mc.std_error
        );
    }

    #[test]
    fn absolute_continuity_is_enforced() {
        let model = mixing_model();
        let mu = b(vec![0.5, 0.5]);
        let nu = b(vec![1.0, 0.0]);
        let err = expected_filter_tv(&model, &mu, &nu, &FixedActionPolicy { action: 0 }, 2, EstimateMethod::Enumerate)
            .unwrap_err();
        assert!(matches!(err, MetricsError::NotAbsolutelyContinuous));
    }

    #[test]
    fn martingale_identity_trivial_cases() {
        let model = mixing_model();
        let mu = b(vec![0.6, 0.4]);
        let check = tv_martingale_identity_check(&model, &mu, &mu.clone(), &FixedActionPolicy { action: 0 }, 3).unwrap();
        assert!(check.lhs.abs() < 1e-15 && check.rhs.abs() < 1e-15);

        let nu = b(vec![0.3, 0.7]);
        let at_zero = tv_martingale_identity_check(&model, &mu, &nu, &FixedActionPolicy { action: 0 }, 0).unwrap();
        let tv = tv_distance(&mu, &nu).unwrap();
        assert!((at_zero.lhs - tv).abs() < 1e-15);
        assert!(at_zero.gap < 1e-15);
    }

    #[test]
    fn martingale_identity_matches_on_a_mixing_model() {
        let model = mixing_model();
        let mu = b(vec![0.85, 0.15]);
        let nu = b(vec![0.3, 0.7]);
        for policy_seed in [1u64, 2, 3] {
            let policy = HashRandomPolicy::new(policy_seed, 2);
            for n in 0..=3 {
                let check = tv_martingale_identity_check(&model, &mu, &nu, &policy, n).unwrap();
                assert!(
                    check.gap <= 1e-10,
                    "seed {policy_seed} n {n}: lhs {} rhs {}",
                    check.lhs,
                    check.rhs
                );
            }
        }
    }
}
