//! Deterministic seed derivation.
//!
//! Every stochastic step takes its own `ChaCha8Rng` seeded from a master seed
//! and a tuple of task coordinates, so results never depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// SplitMix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the task at `coords` under `master`:
/// `h = mix64(master)`, then `h = mix64(h ^ c)` for each coordinate.
pub fn derive(master: u64, coords: &[u64]) -> u64 {
    coords.iter().fold(mix64(master), |h, &c| mix64(h ^ c))
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
