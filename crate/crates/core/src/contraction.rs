//! Kernel overlap coefficients and the contraction constant they induce
//! for the expected filter discrepancy.
//!
//! For a row-stochastic kernel the overlap coefficient is
//! `delta(K) = min_{x,x'} sum_z min(K[x][z], K[x'][z])`.
//! On a finite space the minimum over partitions in the general definition
//! is attained by singletons: coarsening cells can only raise
//! `sum_i min(K(x, A_i), K(x', A_i))` because `min(a+b, c+d) >=
//! min(a,c) + min(b,d)`. The contraction constant combines the worst
//! transition overlap over actions with the observation overlap as
//! `alpha = (1 - delta_min(T)) (2 - delta(Q))`; `alpha < 1` certifies that
//! the expected filter discrepancy contracts by `alpha` per step and hence
//! is bounded by `2 alpha^n`.

use crate::model::PomdpModel;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ContractionError {
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
}

/// Overlap coefficient of a row-stochastic kernel, in `[0, 1]`.
///
/// Equals 1 iff all rows are identical and 0 iff some pair of rows has
/// disjoint support. A single-row kernel has no row pairs and returns 1.
pub fn dobrushin(kernel: &[Vec<f64>]) -> Result<f64, ContractionError> {
    if kernel.is_empty() {
        return Err(ContractionError::InvalidKernel("no rows".into()));
    }
    let width = kernel[0].len();
    for (i, row) in kernel.iter().enumerate() {
        if row.len() != width {
            return Err(ContractionError::InvalidKernel(format!(
                "row {i} has {} entries, expected {width}",
                row.len()
            )));
        }
        let mut sum = 0.0;
        for &v in row {
            if !v.is_finite() || v < 0.0 {
                return Err(ContractionError::InvalidKernel(format!("row {i} has invalid entry {v}")));
            }
            sum += v;
        }
        if (sum - 1.0).abs() > crate::model::ROW_SUM_TOL {
            return Err(ContractionError::InvalidKernel(format!("row {i} sums to {sum}")));
        }
    }

    let mut worst = 1.0f64;
    for i in 0..kernel.len() {
        for j in (i + 1)..kernel.len() {
            let overlap: f64 = kernel[i].iter().zip(&kernel[j]).map(|(&a, &b)| a.min(b)).sum();
            worst = worst.min(overlap);
        }
    }
    Ok(worst)
}

/// Overlap coefficients of a model's kernels and the contraction verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionReport {
    /// Overlap of the transition kernel for each action.
    pub delta_t_per_action: Vec<f64>,
    /// Worst transition overlap over the (finite) action set.
    pub delta_t_inf: f64,
    /// Overlap of the observation channel.
    pub delta_q: f64,
    /// `(1 - delta_t_inf) * (2 - delta_q)`, in `[0, 2]`.
    pub alpha: f64,
    /// True iff `alpha < 1`.
    pub exponentially_stable: bool,
}

impl ContractionReport {
    /// Envelope values `2 alpha^n` for `n = 0..=n_max`.
    pub fn envelope(&self, n_max: usize) -> Vec<f64> {
        contraction_envelope(self.alpha, n_max)
    }
}

/// Computes the overlap coefficients and contraction constant of a model.
pub fn contraction_report(model: &PomdpModel) -> Result<ContractionReport, ContractionError> {
    let delta_t_per_action = model
        .transition
        .iter()
        .map(|kernel| dobrushin(kernel))
        .collect::<Result<Vec<f64>, _>>()?;
    let delta_t_inf = delta_t_per_action.iter().copied().fold(1.0, f64::min);
    let delta_q = dobrushin(&model.observation)?;
    let alpha = (1.0 - delta_t_inf) * (2.0 - delta_q);
    Ok(ContractionReport {
        delta_t_per_action,
        delta_t_inf,
        delta_q,
        alpha,
        exponentially_stable: alpha < 1.0,
    })
}

/// `2 alpha^n` for `n = 0..=n_max`. With the convention `alpha^0 = 1` the
/// envelope always starts at 2, the largest possible total variation.
pub fn contraction_envelope(alpha: f64, n_max: usize) -> Vec<f64> {
    (0..=n_max).map(|n| 2.0 * alpha.powi(n as i32)).collect()
}
