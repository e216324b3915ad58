//! Shared fixtures and seeded generators for the integration suites.

use pomdp_stability::model::{Belief, PomdpModel};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random stochastic row; `floor > 0` keeps every entry supported.
pub fn random_row(rng: &mut ChaCha8Rng, n: usize, floor: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() + floor).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

pub fn random_full_support_belief(rng: &mut ChaCha8Rng, n: usize, floor: f64) -> Belief {
    Belief::new(random_row(rng, n, floor)).unwrap()
}

/// Fully supported random model: kernels floored away from zero, costs in
/// `[0, 1]`.
pub fn random_model(rng: &mut ChaCha8Rng, nx: usize, ny: usize, nu: usize, discount: f64) -> PomdpModel {
    let transition = (0..nu)
        .map(|_| (0..nx).map(|_| random_row(rng, nx, 0.05)).collect())
        .collect();
    let observation = (0..nx).map(|_| random_row(rng, ny, 0.05)).collect();
    let cost = (0..nx)
        .map(|_| (0..nu).map(|_| rng.gen::<f64>()).collect())
        .collect();
    PomdpModel::from_parts(nx, ny, nu, discount, transition, observation, cost).unwrap()
}

/// Random model whose transition rows are pulled toward uniform, which
/// keeps each kernel's overlap at least `1 - mix` and the contraction
/// constant at most `2 * mix`.
pub fn random_mixing_model(
    rng: &mut ChaCha8Rng,
    nx: usize,
    ny: usize,
    nu: usize,
    discount: f64,
    mix: f64,
) -> PomdpModel {
    let uniform = 1.0 / nx as f64;
    let transition: Vec<Vec<Vec<f64>>> = (0..nu)
        .map(|_| {
            (0..nx)
                .map(|_| {
                    random_row(rng, nx, 0.0)
                        .into_iter()
                        .map(|w| (1.0 - mix) * uniform + mix * w)
                        .collect()
                })
                .collect()
        })
        .collect();
    let observation = (0..nx).map(|_| random_row(rng, ny, 0.05)).collect();
    let cost = (0..nx)
        .map(|_| (0..nu).map(|_| rng.gen::<f64>()).collect())
        .collect();
    PomdpModel::from_parts(nx, ny, nu, discount, transition, observation, cost).unwrap()
}

/// Two-state, two-action reference model: transition overlaps 0.5 and 0.7,
/// observation overlap 0.3, contraction constant 0.85, observable channel.
pub fn canonical_fixture() -> PomdpModel {
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

/// Identity transition and a channel whose rows are identical: the filter
/// never moves, the contraction constant is exactly 1, and nothing is
/// observable. All parameters are dyadic so filter updates are bit-exact.
pub fn frozen_fixture() -> PomdpModel {
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

/// Frozen state, perfect channel, cost equal to the state index: the
/// optimal cost from a point mass is 0 or `1/(1-beta)`, so the true span
/// of the optimal cost over priors is `1/(1-beta)`.
pub fn known_span_fixture() -> PomdpModel {
    PomdpModel::from_parts(
        2,
        2,
        2,
        0.9,
        vec![
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        ],
        vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        vec![vec![0.0, 0.0], vec![1.0, 1.0]],
    )
    .unwrap()
}

/// Mixing dynamics with a cost that depends on the action only: the
/// optimal cost is the same for every prior, so the mismatch gap is zero.
pub fn action_cost_fixture() -> PomdpModel {
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
        vec![vec![0.25, 1.0], vec![0.25, 1.0]],
    )
    .unwrap()
}

/// Prints the per-criterion verdict line and fails the test on FAIL.
pub fn report(number: u32, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("ACCEPTANCE {number:>2} {name}: {verdict} ({detail})");
    assert!(pass, "acceptance criterion {number} ({name}) failed: {detail}");
}
