//! Shared fixtures for the benchmarks.

use glrr_core::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn gaussian(seed: u64, rows: usize, cols: usize) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Rank-`r` product of two Gaussian factors.
pub fn low_rank(seed: u64, d: usize, n: usize, r: usize) -> Matrix {
    gaussian(seed, d, r) * gaussian(seed + 1, r, n)
}
