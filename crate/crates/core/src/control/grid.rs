//! Regular discretization of the belief simplex.

use crate::model::Belief;

/// All beliefs whose coordinates are multiples of `1/resolution`, listed in
/// lexicographically ascending coordinate order. The point count is
/// `C(resolution + dim - 1, dim - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefGrid {
    resolution: usize,
    dim: usize,
    points: Vec<Belief>,
}

impl BeliefGrid {
    pub fn new(dim: usize, resolution: usize) -> Self {
        assert!(dim > 0, "grid dimension must be positive");
        assert!(resolution > 0, "grid resolution must be positive");
        let mut points = Vec::new();
        let mut counts = vec![0usize; dim];
        fill(&mut points, &mut counts, 0, resolution, resolution);
        Self {
            resolution,
            dim,
            points,
        }
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Belief] {
        &self.points
    }

    pub fn point(&self, index: usize) -> &Belief {
        &self.points[index]
    }

    /// Index of the nearest grid point in l1 distance. Ties go to the
    /// lexicographically smallest point, which is the first minimizer in
    /// the grid's ascending order; the projection is therefore
    /// deterministic and idempotent on grid points.
    pub fn project(&self, belief: &[f64]) -> usize {
        debug_assert_eq!(belief.len(), self.dim);
        let mut best = 0;
        let mut best_dist = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let mut dist = 0.0;
            for (a, b) in belief.iter().zip(p.probs()) {
                dist += (a - b).abs();
            }
            if dist < best_dist {
                best_dist = dist;
                best = i;
            }
        }
        best
    }
}

fn fill(points: &mut Vec<Belief>, counts: &mut [usize], coord: usize, remaining: usize, resolution: usize) {
    if coord + 1 == counts.len() {
        counts[coord] = remaining;
        let probs: Vec<f64> = counts.iter().map(|&c| c as f64 / resolution as f64).collect();
        points.push(Belief::new(probs).expect("grid point sums to one"));
        return;
    }
    for c in 0..=remaining {
        counts[coord] = c;
        fill(points, counts, coord + 1, remaining - c, resolution);
    }
}
