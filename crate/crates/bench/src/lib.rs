//! Shared fixtures for the benchmarks.

use coarse_lp::mazur::random_unit_vector;
use coarse_lp::{LpVector, PExponent};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A reproducible pair of unit vectors in `l_p^dim`.
pub fn unit_pair(dim: usize, p: PExponent, seed: u64) -> (LpVector, LpVector) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (random_unit_vector(&mut rng, dim, p), random_unit_vector(&mut rng, dim, p))
}
