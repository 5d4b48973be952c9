//! Seed splitting.
//!
//! Every random draw in the crate comes from a `ChaCha8Rng` whose seed is
//! derived from a master seed and a path of integers (stream tag, round,
//! user, ...). Derivation folds each path element through SplitMix64, so
//! streams with different paths are statistically independent and adding a
//! new consumer never shifts an existing one.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags used across the crate. Keeping them in one place makes
/// collisions obvious.
pub mod tag {
    pub const NETWORK: u64 = 1;
    pub const FL_DATA: u64 = 2;
    pub const FL_INIT: u64 = 3;
    pub const FL_ROUND: u64 = 4;
    pub const DINKELBACH: u64 = 5;
    pub const MAX_SUM: u64 = 6;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `derive_seed(s, &[a, b])` = mix(mix(mix(s) ^ a) ^ b).
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &x| splitmix64(acc ^ x))
}

pub fn stream(master: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, path))
}
