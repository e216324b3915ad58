//! Small dense two-phase simplex for the minimax fitting problems in this
//! crate. Bland's rule keeps it cycle-free; problem sizes here are a few
//! dozen rows and columns at most, so clarity wins over sparsity.

use thiserror::Error;

const EPS: f64 = 1e-10;
const MAX_PIVOTS: usize = 20_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub(crate) enum SimplexError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("pivot limit exceeded")]
    PivotLimit,
}

#[derive(Debug, Clone)]
pub(crate) struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

/// Minimizes `c . x` subject to `A x <= b`, `x >= 0`. Entries of `b` may be
/// negative; feasibility is established in phase one.
pub(crate) fn solve_min(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<LpSolution, SimplexError> {
    let m = a.len();
    let n = c.len();
    debug_assert_eq!(b.len(), m);
    debug_assert!(a.iter().all(|row| row.len() == n));

    // Columns: n structural, m slacks, then one artificial per negated row.
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut rhs: Vec<f64> = Vec::with_capacity(m);
    let mut basis: Vec<usize> = Vec::with_capacity(m);
    let mut artificial_rows: Vec<usize> = Vec::new();
    for i in 0..m {
        let mut row = vec![0.0; n + m];
        let flip = b[i] < 0.0;
        for j in 0..n {
            row[j] = if flip { -a[i][j] } else { a[i][j] };
        }
        row[n + i] = if flip { -1.0 } else { 1.0 };
        rhs.push(b[i].abs());
        if flip {
            artificial_rows.push(i);
        }
        rows.push(row);
    }
    let num_artificial = artificial_rows.len();
    let total = n + m + num_artificial;
    for row in &mut rows {
        row.resize(total, 0.0);
    }
    for (k, &i) in artificial_rows.iter().enumerate() {
        rows[i][n + m + k] = 1.0;
        basis.push(0); // placeholder, fixed below
    }
    basis.clear();
    for i in 0..m {
        if let Some(k) = artificial_rows.iter().position(|&r| r == i) {
            basis.push(n + m + k);
        } else {
            basis.push(n + i);
        }
    }

    if num_artificial > 0 {
        let mut phase1 = vec![0.0; total];
        for k in 0..num_artificial {
            phase1[n + m + k] = 1.0;
        }
        optimize(&mut rows, &mut rhs, &mut basis, &phase1, total)?;
        let infeasibility: f64 = (0..m)
            .filter(|&i| basis[i] >= n + m)
            .map(|i| rhs[i])
            .sum();
        if infeasibility > 1e-7 {
            return Err(SimplexError::Infeasible);
        }
        // Pivot remaining artificials out of the basis; a row with no
        // usable pivot is redundant and can carry its zero artificial.
        for i in 0..m {
            if basis[i] >= n + m {
                if let Some(j) = (0..n + m).find(|&j| rows[i][j].abs() > EPS) {
                    pivot(&mut rows, &mut rhs, &mut basis, i, j);
                }
            }
        }
    }

    // Phase two never lets an artificial column re-enter.
    let mut phase2 = vec![0.0; total];
    phase2[..n].copy_from_slice(c);
    optimize(&mut rows, &mut rhs, &mut basis, &phase2, n + m)?;

    let mut x = vec![0.0; n];
    for i in 0..m {
        if basis[i] < n {
            x[basis[i]] = rhs[i];
        }
    }
    let objective = c.iter().zip(&x).map(|(&ci, &xi)| ci * xi).sum();
    Ok(LpSolution { x, objective })
}

/// Runs Bland-rule simplex iterations to optimality for the given costs,
/// considering only the first `active` columns as entering candidates.
fn optimize(
    rows: &mut [Vec<f64>],
    rhs: &mut [f64],
    basis: &mut [usize],
    costs: &[f64],
    active: usize,
) -> Result<(), SimplexError> {
    let m = rows.len();
    for _ in 0..MAX_PIVOTS {
        // Reduced costs from scratch each pass; sizes are tiny and this
        // avoids accumulated drift in a maintained objective row.
        let mut entering = None;
        for j in 0..active {
            if basis.contains(&j) {
                continue;
            }
            let mut reduced = costs[j];
            for i in 0..m {
                let cb = costs[basis[i]];
                if cb != 0.0 {
                    reduced -= cb * rows[i][j];
                }
            }
            if reduced < -EPS {
                entering = Some(j);
                break; // Bland: first improving index.
            }
        }
        let Some(j) = entering else {
            return Ok(());
        };

        let mut leaving: Option<(usize, f64)> = None;
        for i in 0..m {
            if rows[i][j] > EPS {
                let ratio = rhs[i] / rows[i][j];
                match leaving {
                    None => leaving = Some((i, ratio)),
                    Some((best_i, best_ratio)) => {
                        if ratio < best_ratio - EPS
                            || (ratio < best_ratio + EPS && basis[i] < basis[best_i])
                        {
                            leaving = Some((i, ratio));
                        }
                    }
                }
            }
        }
        let Some((i, _)) = leaving else {
            return Err(SimplexError::Unbounded);
        };
        pivot(rows, rhs, basis, i, j);
    }
    Err(SimplexError::PivotLimit)
}

fn pivot(rows: &mut [Vec<f64>], rhs: &mut [f64], basis: &mut [usize], i: usize, j: usize) {
    let scale = rows[i][j];
    for v in rows[i].iter_mut() {
        *v /= scale;
    }
    rhs[i] /= scale;
    for r in 0..rows.len() {
        if r == i {
            continue;
        }
        let factor = rows[r][j];
        if factor == 0.0 {
            continue;
        }
        for col in 0..rows[r].len() {
            rows[r][col] -= factor * rows[i][col];
        }
        rhs[r] -= factor * rhs[i];
        // Clean tiny residue in the pivot column so basis detection stays exact.
        rows[r][j] = 0.0;
    }
    rhs[i] = rhs[i].max(0.0);
    basis[i] = j;
}
