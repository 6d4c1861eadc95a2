//! Seed derivation.
//!
//! Every unit of work (a CV repeat, a fold, a tree, a SMOTE draw) gets its own
//! `ChaCha8Rng` seeded from the master seed through [`mix`], so results never
//! depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a sub-seed: `seed ^ splitmix64(stream)`.
pub fn mix(seed: u64, stream: u64) -> u64 {
    seed ^ splitmix64(stream)
}

/// Derive a sub-seed along a path of stream indices.
pub fn derive(seed: u64, path: &[u64]) -> u64 {
    path.iter().fold(seed, |s, &p| splitmix64(mix(s, p)))
}

pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
