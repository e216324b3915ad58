//! Finite POMDP data model: state/observation/action sets, stochastic
//! kernels, stage costs, and the JSON model-file format.
//!
//! A model couples a controlled transition kernel `T(x'|x,u)` (one
//! row-stochastic matrix per action), an observation channel `Q(y|x)`
//! (action-independent), a non-negative stage cost `c(x,u)`, and a
//! discount factor in `[0, 1)`. Row-stochasticity is checked, never
//! assumed, on every construction path; rows are not renormalized
//! silently because that hides fixture bugs.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use thiserror::Error;

/// Tolerance on kernel row sums and belief normalization.
pub const ROW_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("failed to read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to write {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to parse {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("model validation failed:\n{0}")]
    Invalid(ValidationReport),
    #[error("invalid belief: {0}")]
    Belief(String),
}

/// A single invariant violation, naming the offending entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// Which part of the model is wrong, e.g. `transition[u=1] row 0`.
    pub location: String,
    /// What is wrong with it.
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.detail)
    }
}

/// Outcome of [`PomdpModel::validate`]: empty iff every invariant holds.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, location: impl Into<String>, detail: impl Into<String>) {
        self.violations.push(Violation {
            location: location.into(),
            detail: detail.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "  - {v}")?;
        }
        Ok(())
    }
}

/// Optional human-readable names; metadata only, never used by algorithms.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Labels {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub states: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observations: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actions: Option<Vec<String>>,
}

/// A finite partially observed Markov decision process.
///
/// Indices are 0-based throughout: states `0..num_states`, observations
/// `0..num_obs`, actions `0..num_actions`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PomdpModel {
    pub num_states: usize,
    pub num_obs: usize,
    pub num_actions: usize,
    /// Discount factor in `[0, 1)`.
    pub discount: f64,
    /// Per action `u`, a `num_states x num_states` row-stochastic matrix;
    /// entry `[x][x']` is the probability of moving to `x'` from `x` under `u`.
    pub transition: Vec<Vec<Vec<f64>>>,
    /// `num_states x num_obs` row-stochastic matrix; entry `[x][y]` is the
    /// probability of observing `y` in state `x`.
    pub observation: Vec<Vec<f64>>,
    /// `num_states x num_actions` matrix of non-negative stage costs.
    pub cost: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Labels>,
}

fn check_stochastic_row(report: &mut ValidationReport, location: &str, row: &[f64]) {
    let mut sum = 0.0;
    for (j, &v) in row.iter().enumerate() {
        if !v.is_finite() {
            report.push(location, format!("entry {j} is not finite ({v})"));
            return;
        }
        if v < 0.0 {
            report.push(location, format!("entry {j} is negative ({v})"));
            return;
        }
        sum += v;
    }
    if (sum - 1.0).abs() > ROW_SUM_TOL {
        report.push(location, format!("sums to {sum:.17} (expected 1 within {ROW_SUM_TOL:e})"));
    }
}

impl PomdpModel {
    /// Builds a model and rejects it if any invariant fails.
    pub fn from_parts(
        num_states: usize,
        num_obs: usize,
        num_actions: usize,
        discount: f64,
        transition: Vec<Vec<Vec<f64>>>,
        observation: Vec<Vec<f64>>,
        cost: Vec<Vec<f64>>,
    ) -> Result<Self, ModelError> {
        let model = Self {
            num_states,
            num_obs,
            num_actions,
            discount,
            transition,
            observation,
            cost,
            labels: None,
        };
        let report = model.validate();
        if report.is_empty() {
            Ok(model)
        } else {
            Err(ModelError::Invalid(report))
        }
    }

    /// Checks every invariant and reports each violation with its location.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        if self.num_states == 0 {
            report.push("num_states", "must be positive");
        }
        if self.num_obs == 0 {
            report.push("num_obs", "must be positive");
        }
        if self.num_actions == 0 {
            report.push("num_actions", "must be positive");
        }
        if !self.discount.is_finite() || self.discount < 0.0 {
            report.push("discount", format!("must be a finite value >= 0, got {}", self.discount));
        } else if self.discount >= 1.0 {
            report.push("discount", format!("discount must be < 1, got {}", self.discount));
        }

        if self.transition.len() != self.num_actions {
            report.push(
                "transition",
                format!("expected {} matrices, found {}", self.num_actions, self.transition.len()),
            );
        } else {
            for (u, matrix) in self.transition.iter().enumerate() {
                if matrix.len() != self.num_states {
                    report.push(
                        format!("transition[u={u}]"),
                        format!("expected {} rows, found {}", self.num_states, matrix.len()),
                    );
                    continue;
                }
                for (x, row) in matrix.iter().enumerate() {
                    let location = format!("transition[u={u}] row {x}");
                    if row.len() != self.num_states {
                        report.push(location, format!("expected {} entries, found {}", self.num_states, row.len()));
                        continue;
                    }
                    check_stochastic_row(&mut report, &location, row);
                }
            }
        }

        if self.observation.len() != self.num_states {
            report.push(
                "observation",
                format!("expected {} rows, found {}", self.num_states, self.observation.len()),
            );
        } else {
            for (x, row) in self.observation.iter().enumerate() {
                let location = format!("observation row {x}");
                if row.len() != self.num_obs {
                    report.push(location, format!("expected {} entries, found {}", self.num_obs, row.len()));
                    continue;
                }
                check_stochastic_row(&mut report, &location, row);
            }
        }

        if self.cost.len() != self.num_states {
            report.push("cost", format!("expected {} rows, found {}", self.num_states, self.cost.len()));
        } else {
            for (x, row) in self.cost.iter().enumerate() {
                if row.len() != self.num_actions {
                    report.push(
                        format!("cost row {x}"),
                        format!("expected {} entries, found {}", self.num_actions, row.len()),
                    );
                    continue;
                }
                for (u, &c) in row.iter().enumerate() {
                    if !c.is_finite() {
                        report.push(format!("cost[{x}][{u}]"), format!("must be finite, got {c}"));
                    } else if c < 0.0 {
                        report.push(format!("cost[{x}][{u}]"), format!("must be non-negative, got {c}"));
                    }
                }
            }
        }

        report
    }

    /// Row `T(.|x,u)` of the transition kernel.
    #[inline]
    pub fn transition_row(&self, u: usize, x: usize) -> &[f64] {
        &self.transition[u][x]
    }

    /// Row `Q(.|x)` of the observation channel.
    #[inline]
    pub fn observation_row(&self, x: usize) -> &[f64] {
        &self.observation[x]
    }

    #[inline]
    pub fn stage_cost(&self, x: usize, u: usize) -> f64 {
        self.cost[x][u]
    }

    /// Sup norm of the stage cost.
    pub fn cost_sup(&self) -> f64 {
        self.cost
            .iter()
            .flat_map(|row| row.iter().copied())
            .fold(0.0_f64, f64::max)
    }
}

/// Reads and validates a model file. Parse failures carry the file path
/// plus serde's line/column context; validation failures list every
/// violated invariant.
pub fn load_model(path: impl AsRef<Path>) -> Result<PomdpModel, ModelError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ModelError::Read {
        path: path.display().to_string(),
        source,
    })?;
    let model: PomdpModel = serde_json::from_str(&text).map_err(|source| ModelError::Parse {
        path: path.display().to_string(),
        source,
    })?;
    let report = model.validate();
    if !report.is_empty() {
        return Err(ModelError::Invalid(report));
    }
    Ok(model)
}

/// Writes the model as pretty-printed JSON. Values round-trip exactly:
/// `load_model(save_model(m)) == m` entry-wise.
pub fn save_model(model: &PomdpModel, path: impl AsRef<Path>) -> Result<(), ModelError> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(model).expect("model serialization cannot fail");
    text.push('\n');
    std::fs::write(path, text).map_err(|source| ModelError::Write {
        path: path.display().to_string(),
        source,
    })
}

/// A probability vector over the state set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Belief {
    probs: Vec<f64>,
}

impl Belief {
    /// Accepts a vector with non-negative entries summing to 1 within
    /// [`ROW_SUM_TOL`].
    pub fn new(probs: Vec<f64>) -> Result<Self, ModelError> {
        if probs.is_empty() {
            return Err(ModelError::Belief("empty probability vector".into()));
        }
        let mut sum = 0.0;
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() {
                return Err(ModelError::Belief(format!("entry {i} is not finite ({p})")));
            }
            if p < 0.0 {
                return Err(ModelError::Belief(format!("entry {i} is negative ({p})")));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(ModelError::Belief(format!(
                "entries sum to {sum:.17}, expected 1 within {ROW_SUM_TOL:e}"
            )));
        }
        Ok(Self { probs })
    }

    /// Normalizes a vector of non-negative weights. Fails on a zero or
    /// non-finite total; never silently fixes a degenerate input.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self, ModelError> {
        let total: f64 = weights.iter().sum();
        if !total.is_finite() || total <= 0.0 {
            return Err(ModelError::Belief(format!("weights sum to {total}, cannot normalize")));
        }
        let probs = weights.into_iter().map(|w| w / total).collect();
        Ok(Self { probs })
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "belief dimension must be positive");
        Self {
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn point_mass(n: usize, state: usize) -> Self {
        assert!(state < n, "state index out of range");
        let mut probs = vec![0.0; n];
        probs[state] = 1.0;
        Self { probs }
    }

    #[inline]
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn has_full_support(&self) -> bool {
        self.probs.iter().all(|&p| p > 0.0)
    }
}

impl std::ops::Index<usize> for Belief {
    type Output = f64;

    #[inline]
    fn index(&self, x: usize) -> &f64 {
        &self.probs[x]
    }
}

impl TryFrom<Vec<f64>> for Belief {
    type Error = ModelError;

    fn try_from(probs: Vec<f64>) -> Result<Self, ModelError> {
        Belief::new(probs)
    }
}

impl From<Belief> for Vec<f64> {
    fn from(b: Belief) -> Vec<f64> {
        b.probs
    }
}

/// `mu` is absolutely continuous with respect to `nu`: every null state of
/// `nu` is a null state of `mu`.
pub fn absolutely_continuous(mu: &Belief, nu: &Belief) -> bool {
    mu.len() == nu.len() && mu.probs().iter().zip(nu.probs()).all(|(&m, &n)| n > 0.0 || m == 0.0)
}

/// One sampled path of states, observations, and actions.
///
/// For an `n`-step run, `states` and `observations` have length `n + 1`
/// and `actions` has length `n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Trajectory {
    pub states: Vec<usize>,
    pub observations: Vec<usize>,
    pub actions: Vec<usize>,
}

impl Trajectory {
    /// Number of steps taken (one less than the number of states visited).
    pub fn horizon(&self) -> usize {
        self.actions.len()
    }

    pub fn check_lengths(&self) -> Result<(), ModelError> {
        if self.states.len() != self.actions.len() + 1 || self.observations.len() != self.states.len() {
            return Err(ModelError::Belief(format!(
                "inconsistent trajectory lengths: {} states, {} observations, {} actions",
                self.states.len(),
                self.observations.len(),
                self.actions.len()
            )));
        }
        Ok(())
    }
}
