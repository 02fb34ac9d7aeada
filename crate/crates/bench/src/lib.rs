//! Seeded inputs shared by the benchmarks in `benches/`.

use osf_core::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn gaussian_vec(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn gaussian_matrix(n: usize, seed: u64) -> Mat {
    Mat::from_vec(n, n, gaussian_vec(n * n, seed)).expect("square shape")
}

/// (G + Gᵀ) / 2 for a Gaussian G.
pub fn symmetric_matrix(n: usize, seed: u64) -> Mat {
    let g = gaussian_matrix(n, seed);
    g.add(&g.transpose()).scale(0.5)
}
