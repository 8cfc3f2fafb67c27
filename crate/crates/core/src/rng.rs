//! Seeded, portable random streams.
//!
//! Every randomized task owns a ChaCha8 stream whose seed is derived from a
//! root seed and a path of task indices (for example `[manifold, trial]`).
//! The derivation is a SplitMix64 finaliser applied to `seed ^ mix(index)`
//! once per path element, so a given `(seed, path)` reproduces the same
//! output bit-for-bit regardless of thread count or scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TaskRng = ChaCha8Rng;

pub const DEFAULT_SEED: u64 = 20_190_101;

/// SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of a sub-task.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(seed, |acc, &index| splitmix64(acc ^ splitmix64(index)))
}

pub fn task_rng(seed: u64, path: &[u64]) -> TaskRng {
    TaskRng::seed_from_u64(derive_seed(seed, path))
}
