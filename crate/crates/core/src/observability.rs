//! Observability of the measurement channel.
//!
//! On a finite space the functions reachable through the channel,
//! `{ Q g : g bounded on the observation set }`, form exactly the column
//! space of `Q` viewed as a `|X| x |Y|` matrix. Every state function is
//! therefore sup-norm approximable through the channel iff that column
//! space is all of `R^{|X|}`, i.e. `rank(Q) = |X|`; the coordinate
//! indicators span the general case. Alongside the rank test this module
//! solves the best-approximation problem for a given target directly: the
//! minimax fit `min_g max_x |f(x) - (Qg)(x)|` as a linear program.

use crate::model::PomdpModel;
use crate::simplex::{solve_min, SimplexError};
use nalgebra::DMatrix;
use serde::Serialize;

/// Relative singular-value cutoff for the rank decision.
pub const RANK_SV_REL_TOL: f64 = 1e-10;

/// Residual below which an indicator counts as exactly representable.
pub const OBSERVABLE_RESIDUAL_TOL: f64 = 1e-9;

/// Channel-rank verdict plus the hardest coordinate indicator to match.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservabilityReport {
    /// Numerical rank of the channel matrix.
    pub rank_q: usize,
    /// True iff `rank_q` equals the number of states.
    pub observable: bool,
    /// Max over coordinate indicators of the minimax fit residual.
    pub worst_residual: f64,
    /// Sup norm of the fitted observation function attaining
    /// `worst_residual`; large values flag an ill-conditioned channel.
    pub worst_g_sup_norm: f64,
}

/// Best sup-norm approximation of a state function through the channel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelFit {
    /// Observation function `g` minimizing `max_x |f(x) - (Qg)(x)|`.
    pub g: Vec<f64>,
    /// Attained residual, recomputed from `g` (not the solver objective).
    pub residual: f64,
    /// Sup norm of `g`.
    pub g_sup_norm: f64,
    /// Whether `residual < epsilon` for the requested tolerance.
    pub meets_epsilon: bool,
}

/// Rank check plus minimax fits for every coordinate indicator.
pub fn observability_report(model: &PomdpModel) -> ObservabilityReport {
    let nx = model.num_states;
    let ny = model.num_obs;
    let flat: Vec<f64> = model.observation.iter().flatten().copied().collect();
    let q = DMatrix::from_row_slice(nx, ny, &flat);
    let singular_values = q.svd(false, false).singular_values;
    let largest = singular_values.iter().copied().fold(0.0f64, f64::max);
    let rank_q = if largest == 0.0 {
        0
    } else {
        singular_values.iter().filter(|&&s| s > RANK_SV_REL_TOL * largest).count()
    };

    let mut worst_residual = 0.0f64;
    let mut worst_g_sup_norm = 0.0f64;
    for x in 0..nx {
        let mut indicator = vec![0.0; nx];
        indicator[x] = 1.0;
        let fit = approximate_g(model, &indicator, OBSERVABLE_RESIDUAL_TOL);
        if fit.residual > worst_residual {
            worst_residual = fit.residual;
            worst_g_sup_norm = fit.g_sup_norm;
        }
    }

    ObservabilityReport {
        rank_q,
        observable: rank_q == nx,
        worst_residual,
        worst_g_sup_norm,
    }
}

/// Solves `min_g max_x |f(x) - (Qg)(x)|` exactly.
///
/// The program is always feasible (`g = 0` gives residual `max |f|`) and
/// bounded below by zero, so a minimum is always attained.
pub fn approximate_g(model: &PomdpModel, f: &[f64], epsilon: f64) -> ChannelFit {
    assert_eq!(f.len(), model.num_states, "target has wrong dimension");
    assert!(f.iter().all(|v| v.is_finite()), "target must be finite");
    let nx = model.num_states;
    let ny = model.num_obs;

    // Variables: g+ (ny), g- (ny), t. Constraints per state x:
    //   (Qg)(x) - t <= f(x)   and   -(Qg)(x) - t <= -f(x).
    let num_vars = 2 * ny + 1;
    let mut costs = vec![0.0; num_vars];
    costs[2 * ny] = 1.0;
    let mut rows = Vec::with_capacity(2 * nx);
    let mut rhs = Vec::with_capacity(2 * nx);
    for x in 0..nx {
        let q_row = model.observation_row(x);
        let mut upper = vec![0.0; num_vars];
        let mut lower = vec![0.0; num_vars];
        for y in 0..ny {
            upper[y] = q_row[y];
            upper[ny + y] = -q_row[y];
            lower[y] = -q_row[y];
            lower[ny + y] = q_row[y];
        }
        upper[2 * ny] = -1.0;
        lower[2 * ny] = -1.0;
        rows.push(upper);
        rhs.push(f[x]);
        rows.push(lower);
        rhs.push(-f[x]);
    }

    let solution = match solve_min(&costs, &rows, &rhs) {
        Ok(s) => s,
        // Unreachable for this always-feasible bounded program; keep the
        // trivial fit rather than panicking deep inside an experiment.
        Err(SimplexError::Infeasible) | Err(SimplexError::Unbounded) | Err(SimplexError::PivotLimit) => {
            let residual = f.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
            return ChannelFit {
                g: vec![0.0; ny],
                residual,
                g_sup_norm: 0.0,
                meets_epsilon: residual < epsilon,
            };
        }
    };

    let g: Vec<f64> = (0..ny).map(|y| solution.x[y] - solution.x[ny + y]).collect();
    let mut residual = 0.0f64;
    for x in 0..nx {
        let through: f64 = model.observation_row(x).iter().zip(&g).map(|(&q, &gy)| q * gy).sum();
        residual = residual.max((f[x] - through).abs());
    }
    debug_assert!(
        (residual - solution.objective).abs() <= 1e-6 * (1.0 + solution.objective.abs()),
        "recomputed residual {residual} drifted from the solver objective {}",
        solution.objective
    );
    let g_sup_norm = g.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    ChannelFit {
        g,
        residual,
        g_sup_norm,
        meets_epsilon: residual < epsilon,
    }
}
