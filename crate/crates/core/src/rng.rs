//! Deterministic seed derivation.
//!
//! A master seed expands into per-task seeds with a SplitMix64 counter:
//! task `k` receives `splitmix64(master + (k + 1) * GAMMA)`. The scheme name
//! is recorded in every report as [`SEED_SCHEME`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const SEED_SCHEME: &str = "splitmix64-counter/chacha8";

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, task: u64) -> u64 {
    splitmix64(master.wrapping_add(task.wrapping_add(1).wrapping_mul(GAMMA)))
}

pub fn rng_for(master: u64, task: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, task))
}
