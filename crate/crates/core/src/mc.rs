//! Deterministic Monte Carlo plumbing.
//!
//! Samples are split into fixed-size chunks; chunk `c` draws from a
//! counter-based generator keyed by `(seed, c)` and partial moments are
//! reduced in chunk order. Results are therefore bit-identical for a given
//! seed regardless of how many worker threads run the chunks.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub(crate) const CHUNK_SIZE: usize = 1024;

/// Generator for one chunk of samples. Streams keep chunks independent
/// without re-seeding.
pub(crate) fn chunk_rng(seed: u64, chunk_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk_index + 1);
    rng
}

/// Running first and second moments for a fixed-width vector of outputs.
/// Welford accumulation with pairwise merging: no cancellation, and a
/// stream of identical values reports exactly zero standard error.
#[derive(Debug, Clone)]
pub(crate) struct Moments {
    mean: Vec<f64>,
    m2: Vec<f64>,
    count: u64,
}

impl Moments {
    fn zero(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
            count: 0,
        }
    }

    fn absorb(&mut self, values: &[f64]) {
        debug_assert_eq!(values.len(), self.mean.len());
        self.count += 1;
        let n = self.count as f64;
        for (i, &v) in values.iter().enumerate() {
            let delta = v - self.mean[i];
            self.mean[i] += delta / n;
            self.m2[i] += delta * (v - self.mean[i]);
        }
    }

    fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other.clone();
            return;
        }
        let na = self.count as f64;
        let nb = other.count as f64;
        let n = na + nb;
        for i in 0..self.mean.len() {
            let delta = other.mean[i] - self.mean[i];
            self.mean[i] += delta * (nb / n);
            self.m2[i] += other.m2[i] + delta * delta * (na * nb / n);
        }
        self.count += other.count;
    }

    pub fn mean(&self, i: usize) -> f64 {
        self.mean[i]
    }

    /// Standard error of the mean; 0 for a single sample.
    pub fn std_error(&self, i: usize) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        let var = (self.m2[i] / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }
}

/// Runs `samples` independent evaluations of `body` and accumulates the
/// `dim`-wide output vectors. `body` fills `out` for one sample using the
/// provided generator. Errors abort the run; the reported error is the one
/// from the lowest-indexed failing chunk, keeping failures deterministic.
pub(crate) fn run_chunked<E, F>(samples: usize, seed: u64, dim: usize, body: F) -> Result<Moments, E>
where
    E: Send,
    F: Fn(&mut ChaCha8Rng, &mut [f64]) -> Result<(), E> + Sync,
{
    assert!(samples > 0, "need at least one sample");
    let num_chunks = samples.div_ceil(CHUNK_SIZE);
    let partials: Vec<Result<Moments, E>> = (0..num_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = chunk_rng(seed, chunk as u64);
            let mut moments = Moments::zero(dim);
            let mut out = vec![0.0; dim];
            let lo = chunk * CHUNK_SIZE;
            let hi = ((chunk + 1) * CHUNK_SIZE).min(samples);
            for _ in lo..hi {
                out.iter_mut().for_each(|v| *v = 0.0);
                body(&mut rng, &mut out)?;
                moments.absorb(&out);
            }
            Ok(moments)
        })
        .collect();

    let mut total = Moments::zero(dim);
    for partial in partials {
        total.merge(&partial?);
    }
    Ok(total)
}
