//! Controlled predictor/filter recursion and an independent
//! exact-enumeration oracle for the same conditional laws.
//!
//! The recursion alternates a Bayes measurement update
//! `pi_n(x) = Q(y_n|x) pi_{n-}(x) / sum_x' Q(y_n|x') pi_{n-}(x')`
//! with a kernel time update
//! `pi_{n+1-}(x') = sum_x T(x'|x,u_n) pi_n(x)`,
//! starting from the predictor `pi_{0-} = prior`. The oracle instead sums
//! the joint path weights over *all* state sequences for every observation
//! sequence, so the two routes share no code beyond the model itself.

use crate::model::{Belief, PomdpModel};
use crate::policy::{Policy, PolicyCursor};
use rand::Rng;
use thiserror::Error;

/// Upper bound on the number of joint state/observation paths the oracle
/// will enumerate.
pub const ENUMERATION_GUARD: u128 = 10_000_000;

#[derive(Debug, Error)]
pub enum FilterError {
    /// The observed symbol has zero likelihood under the current predictor.
    /// This signals data incompatible with the filter's prior; the belief
    /// is never silently reset.
    #[error("observation {observation} has zero likelihood under the predictor")]
    ZeroLikelihood { observation: usize },
    #[error("observation {observation} has zero likelihood under the predictor at time {time}")]
    ZeroLikelihoodAt { time: usize, observation: usize },
    #[error("expected {expected} observations for {actions} actions, found {found}")]
    LengthMismatch {
        expected: usize,
        actions: usize,
        found: usize,
    },
    #[error("enumeration of {paths} joint paths exceeds the guard of {guard}")]
    EnumerationTooLarge { paths: u128, guard: u128 },
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
}

/// Predictor/filter pair at one time step: `predictor` conditions on
/// observations strictly before `time`, `filter` also on the observation
/// at `time`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    pub time: usize,
    pub predictor: Belief,
    pub filter: Belief,
}

/// Bayes measurement update of a predictor for observation `y`.
///
/// Fails with [`FilterError::ZeroLikelihood`] when the observation is
/// impossible under the predictor.
pub fn measurement_update(model: &PomdpModel, predictor: &Belief, y: usize) -> Result<Belief, FilterError> {
    if y >= model.num_obs {
        return Err(FilterError::IndexOutOfRange(format!(
            "observation {y} with {} symbols",
            model.num_obs
        )));
    }
    let mut weights = vec![0.0; model.num_states];
    let mut total = 0.0;
    for x in 0..model.num_states {
        let w = model.observation[x][y] * predictor[x];
        weights[x] = w;
        total += w;
    }
    if total <= 0.0 {
        return Err(FilterError::ZeroLikelihood { observation: y });
    }
    for w in &mut weights {
        *w /= total;
    }
    Ok(Belief::from_weights(weights).expect("normalized by construction"))
}

/// Pushes a filter forward through the transition kernel for action `u`.
pub fn time_update(model: &PomdpModel, filter: &Belief, u: usize) -> Belief {
    assert!(u < model.num_actions, "action index {u} out of range");
    let mut next = vec![0.0; model.num_states];
    for x in 0..model.num_states {
        let p = filter[x];
        if p == 0.0 {
            continue;
        }
        let row = model.transition_row(u, x);
        for (xn, &t) in row.iter().enumerate() {
            next[xn] += t * p;
        }
    }
    Belief::from_weights(next).expect("row-stochastic kernel preserves mass")
}

/// Runs the full recursion along a realized path.
///
/// `observations` has length `n + 1` and `actions` length `n`; entry `k`
/// of the result holds the predictor and filter at time `k`. The output
/// depends on the realized `(y, u)` pair sequence only, not on whatever
/// policy produced the actions.
pub fn run_filter(
    model: &PomdpModel,
    prior: &Belief,
    observations: &[usize],
    actions: &[usize],
) -> Result<Vec<FilterState>, FilterError> {
    if observations.len() != actions.len() + 1 {
        return Err(FilterError::LengthMismatch {
            expected: actions.len() + 1,
            actions: actions.len(),
            found: observations.len(),
        });
    }
    let mut states = Vec::with_capacity(observations.len());
    let mut predictor = prior.clone();
    for (k, &y) in observations.iter().enumerate() {
        let filter = measurement_update(model, &predictor, y).map_err(|e| match e {
            FilterError::ZeroLikelihood { observation } => FilterError::ZeroLikelihoodAt { time: k, observation },
            other => other,
        })?;
        let next_predictor = if k < actions.len() {
            Some(time_update(model, &filter, actions[k]))
        } else {
            None
        };
        states.push(FilterState {
            time: k,
            predictor,
            filter,
        });
        match next_predictor {
            Some(p) => predictor = p,
            None => break,
        }
    }
    Ok(states)
}

/// One observation sequence together with its probability under the
/// strategic measure and the exact filter it induces.
#[derive(Debug, Clone)]
pub struct OracleEntry {
    pub observations: Vec<usize>,
    pub probability: f64,
    pub filter: Belief,
}

fn checked_path_count(model: &PomdpModel, horizon: usize) -> Result<u128, FilterError> {
    let steps = horizon as u32 + 1;
    let paths = (model.num_states as u128)
        .checked_pow(steps)
        .and_then(|s| (model.num_obs as u128).checked_pow(steps).and_then(|o| s.checked_mul(o)))
        .unwrap_or(u128::MAX);
    if paths > ENUMERATION_GUARD {
        return Err(FilterError::EnumerationTooLarge {
            paths,
            guard: ENUMERATION_GUARD,
        });
    }
    Ok(paths)
}

/// Brute-force evaluation of the strategic measure: for every observation
/// sequence `y_{0..=n}` the joint law of `(X_n, y)` is accumulated by
/// summing over all state paths, with actions generated by `policy` along
/// the observation prefix.
///
/// Entries with zero probability are omitted. Probabilities over the
/// returned sequences sum to 1.
pub fn enumeration_oracle<P: Policy>(
    model: &PomdpModel,
    prior: &Belief,
    policy: &P,
    horizon: usize,
) -> Result<Vec<OracleEntry>, FilterError> {
    checked_path_count(model, horizon)?;
    let mut entries = Vec::new();
    let mut obs_seq = vec![0usize; horizon + 1];
    loop {
        // Replay the policy along this observation sequence.
        let mut cursor = policy.start();
        let mut actions = Vec::with_capacity(horizon);
        for &y in obs_seq.iter().take(horizon) {
            actions.push(cursor.act(y)?);
        }

        let mut joint = vec![0.0f64; model.num_states];
        accumulate_state_paths(model, prior, &obs_seq, &actions, 0, 0, 1.0, &mut joint);
        let probability: f64 = joint.iter().sum();
        if probability > 0.0 {
            let filter = Belief::from_weights(joint).expect("positive mass");
            entries.push(OracleEntry {
                observations: obs_seq.clone(),
                probability,
                filter,
            });
        }

        // Advance the observation odometer (last index fastest).
        let mut k = horizon + 1;
        loop {
            if k == 0 {
                return Ok(entries);
            }
            k -= 1;
            obs_seq[k] += 1;
            if obs_seq[k] < model.num_obs {
                break;
            }
            obs_seq[k] = 0;
        }
    }
}

/// Walks every state path consistent with `obs_seq`, multiplying prior,
/// transition, and observation weights, and adds the terminal weight into
/// `joint[x_n]`. Recursion depth is the horizon, which the guard keeps small.
fn accumulate_state_paths(
    model: &PomdpModel,
    prior: &Belief,
    obs_seq: &[usize],
    actions: &[usize],
    k: usize,
    prev_state: usize,
    weight: f64,
    joint: &mut [f64],
) {
    if weight == 0.0 {
        return;
    }
    if k == obs_seq.len() {
        joint[prev_state] += weight;
        return;
    }
    for x in 0..model.num_states {
        let step = if k == 0 {
            prior[x]
        } else {
            model.transition[actions[k - 1]][prev_state][x]
        };
        let w = weight * step * model.observation[x][obs_seq[k]];
        accumulate_state_paths(model, prior, obs_seq, actions, k + 1, x, w, joint);
    }
}

/// Samples one path of the strategic measure: states from the prior and
/// transition kernel, observations from the channel, actions from the
/// policy cursor.
pub fn sample_trajectory<C: PolicyCursor>(
    model: &PomdpModel,
    prior: &Belief,
    cursor: &mut C,
    horizon: usize,
    rng: &mut impl Rng,
) -> Result<crate::model::Trajectory, FilterError> {
    let mut states = Vec::with_capacity(horizon + 1);
    let mut observations = Vec::with_capacity(horizon + 1);
    let mut actions = Vec::with_capacity(horizon);
    let mut x = sample_index(rng, prior.probs());
    for k in 0..=horizon {
        states.push(x);
        let y = sample_index(rng, model.observation_row(x));
        observations.push(y);
        if k < horizon {
            let u = cursor.act(y)?;
            actions.push(u);
            x = sample_index(rng, model.transition_row(u, x));
        }
    }
    Ok(crate::model::Trajectory {
        states,
        observations,
        actions,
    })
}

/// Draws an index proportionally to non-negative weights that sum to ~1.
#[inline]
pub(crate) fn sample_index(rng: &mut impl Rng, weights: &[f64]) -> usize {
    let draw: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            last_positive = i;
            acc += w;
            if draw < acc {
                return i;
            }
        }
    }
    // Rounding can leave acc slightly below 1; land on the last live index.
    last_positive
}
