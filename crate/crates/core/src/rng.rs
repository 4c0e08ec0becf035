//! Seed derivation.
//!
//! Every random draw in a run comes from a [`ChaCha8Rng`] whose seed is a pure
//! function of the master seed and a short path of integers (generation,
//! purpose, evaluation index, ...). Two streams with different paths are
//! independent; the same path always yields the same stream, so the order in
//! which work is scheduled never changes results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags used as the second path element.
pub mod purpose {
    pub const INITIAL_TASKS: u64 = 1;
    pub const EVALUATION: u64 = 2;
    pub const SELECT_TASKS: u64 = 3;
    pub const CVT: u64 = 4;
    pub const OPPONENTS: u64 = 5;
    pub const ELO: u64 = 6;
    pub const PCA: u64 = 7;
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(mix64(master), |acc, &p| mix64(acc ^ mix64(p.wrapping_add(0x5851_F42D_4C95_7F2D))))
}

pub fn stream(master: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, path))
}
