//! Value iteration on the discretized belief simplex.

use super::grid::BeliefGrid;
use super::ControlError;
use crate::filter::{measurement_update, time_update, FilterError};
use crate::model::{Belief, PomdpModel};
use crate::policy::{Policy, PolicyCursor};
use rayon::prelude::*;

#[derive(Debug, Clone, Copy)]
pub struct ValueIterationOptions {
    /// Stop when the sup-norm change of a sweep falls below this.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for ValueIterationOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_sweeps: 100_000,
        }
    }
}

/// A stationary grid policy: the solved value and greedy action at every
/// grid point, applied to arbitrary beliefs through l1 projection.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefPolicy {
    grid: BeliefGrid,
    action_at: Vec<usize>,
    value_at: Vec<f64>,
}

impl BeliefPolicy {
    pub fn grid(&self) -> &BeliefGrid {
        &self.grid
    }

    pub fn actions(&self) -> &[usize] {
        &self.action_at
    }

    pub fn values(&self) -> &[f64] {
        &self.value_at
    }

    /// Greedy action at the projection of `belief`.
    pub fn action(&self, belief: &[f64]) -> usize {
        self.action_at[self.grid.project(belief)]
    }

    /// Solved value at the projection of `belief`. The argument is a
    /// post-measurement filter: the next action is chosen with no further
    /// information.
    pub fn value(&self, belief: &[f64]) -> f64 {
        self.value_at[self.grid.project(belief)]
    }

    /// Optimal cost from a fresh prior (equivalently, a pre-measurement
    /// predictor): the first observation arrives before the first action,
    /// so the prior's cost is the observation-weighted solved value at the
    /// resulting filters. Evaluating [`Self::value`] at a predictor instead
    /// would discard that observation and overstate the cost.
    pub fn prior_value(&self, model: &PomdpModel, prior: &[f64]) -> f64 {
        debug_assert_eq!(prior.len(), model.num_states);
        let mut total = 0.0;
        for y in 0..model.num_obs {
            let mut posterior = vec![0.0; model.num_states];
            let mut prob = 0.0;
            for (x, &p) in prior.iter().enumerate() {
                let w = p * model.observation[x][y];
                posterior[x] = w;
                prob += w;
            }
            if prob == 0.0 {
                continue;
            }
            for w in &mut posterior {
                *w /= prob;
            }
            total += prob * self.value(&posterior);
        }
        total
    }
}

/// Precomputed one-step dynamics of the projected belief process.
struct GridDynamics {
    /// `[point][action]`: expected stage cost at the point's belief.
    stage_cost: Vec<Vec<f64>>,
    /// `[point][action]`: observation probability and successor grid index,
    /// zero-probability observations omitted.
    successors: Vec<Vec<Vec<(f64, usize)>>>,
}

fn build_dynamics(model: &PomdpModel, grid: &BeliefGrid) -> GridDynamics {
    let num_actions = model.num_actions;
    let per_point: Vec<(Vec<f64>, Vec<Vec<(f64, usize)>>)> = grid
        .points()
        .par_iter()
        .map(|point| {
            let belief = point.probs();
            let mut costs = Vec::with_capacity(num_actions);
            let mut succ = Vec::with_capacity(num_actions);
            for u in 0..num_actions {
                let stage: f64 = belief.iter().enumerate().map(|(x, &p)| p * model.stage_cost(x, u)).sum();
                costs.push(stage);

                // Predictor after acting, then one entry per possible symbol.
                let mut pred = vec![0.0; model.num_states];
                for (x, &p) in belief.iter().enumerate() {
                    if p == 0.0 {
                        continue;
                    }
                    for (xn, &t) in model.transition_row(u, x).iter().enumerate() {
                        pred[xn] += p * t;
                    }
                }
                let mut entries = Vec::with_capacity(model.num_obs);
                for y in 0..model.num_obs {
                    let mut posterior = vec![0.0; model.num_states];
                    let mut prob = 0.0;
                    for x in 0..model.num_states {
                        let w = pred[x] * model.observation[x][y];
                        posterior[x] = w;
                        prob += w;
                    }
                    if prob == 0.0 {
                        continue;
                    }
                    for w in &mut posterior {
                        *w /= prob;
                    }
                    entries.push((prob, grid.project(&posterior)));
                }
                succ.push(entries);
            }
            (costs, succ)
        })
        .collect();

    let mut stage_cost = Vec::with_capacity(per_point.len());
    let mut successors = Vec::with_capacity(per_point.len());
    for (costs, succ) in per_point {
        stage_cost.push(costs);
        successors.push(succ);
    }
    GridDynamics {
        stage_cost,
        successors,
    }
}

/// Solves the discounted belief process on the grid by synchronous sweeps
/// `V_{t+1}(b) = min_u [ c(b,u) + beta * sum_y P(y|b,u) V_t(next(b,u,y)) ]`,
/// stopping when the sup-norm change drops below `opts.tol`. Greedy actions
/// break ties toward the lowest index.
pub fn value_iteration_discounted(
    model: &PomdpModel,
    grid: BeliefGrid,
    opts: ValueIterationOptions,
) -> Result<BeliefPolicy, ControlError> {
    assert_eq!(grid.dim(), model.num_states, "grid dimension must match the state count");
    let beta = model.discount;
    let dynamics = build_dynamics(model, &grid);
    let len = grid.len();

    let mut values = vec![0.0f64; len];
    let mut converged = false;
    let mut residual = f64::INFINITY;
    for _sweep in 0..opts.max_sweeps {
        let new_values: Vec<f64> = (0..len)
            .into_par_iter()
            .map(|p| {
                let mut best = f64::INFINITY;
                for u in 0..model.num_actions {
                    let mut future = 0.0;
                    for &(prob, next) in &dynamics.successors[p][u] {
                        future += prob * values[next];
                    }
                    let q = dynamics.stage_cost[p][u] + beta * future;
                    if q < best {
                        best = q;
                    }
                }
                best
            })
            .collect();
        residual = values
            .iter()
            .zip(&new_values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        values = new_values;
        if residual < opts.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(ControlError::NonConvergence {
            sweeps: opts.max_sweeps,
            residual,
        });
    }

    let action_at: Vec<usize> = (0..len)
        .into_par_iter()
        .map(|p| {
            let mut best_u = 0;
            let mut best_q = f64::INFINITY;
            for u in 0..model.num_actions {
                let mut future = 0.0;
                for &(prob, next) in &dynamics.successors[p][u] {
                    future += prob * values[next];
                }
                let q = dynamics.stage_cost[p][u] + beta * future;
                if q < best_q {
                    best_q = q;
                    best_u = u;
                }
            }
            best_u
        })
        .collect();

    Ok(BeliefPolicy {
        grid,
        action_at,
        value_at: values,
    })
}

/// Adapts a grid policy into an observation-history policy: the cursor
/// runs the filter recursion from `design_prior` and plays the greedy
/// action at each filter realization.
pub struct TrackedGridPolicy<'a> {
    model: &'a PomdpModel,
    policy: &'a BeliefPolicy,
    design_prior: Belief,
}

impl<'a> TrackedGridPolicy<'a> {
    pub fn new(model: &'a PomdpModel, policy: &'a BeliefPolicy, design_prior: Belief) -> Self {
        assert_eq!(design_prior.len(), model.num_states);
        Self {
            model,
            policy,
            design_prior,
        }
    }
}

impl<'a> Policy for TrackedGridPolicy<'a> {
    type Cursor = TrackedGridCursor<'a>;

    fn start(&self) -> TrackedGridCursor<'a> {
        TrackedGridCursor {
            model: self.model,
            policy: self.policy,
            predictor: self.design_prior.clone(),
        }
    }
}

#[derive(Clone)]
pub struct TrackedGridCursor<'a> {
    model: &'a PomdpModel,
    policy: &'a BeliefPolicy,
    predictor: Belief,
}

impl PolicyCursor for TrackedGridCursor<'_> {
    fn act(&mut self, y: usize) -> Result<usize, FilterError> {
        let filt = measurement_update(self.model, &self.predictor, y)?;
        let u = self.policy.action(filt.probs());
        self.predictor = time_update(self.model, &filt, u);
        Ok(u)
    }
}
