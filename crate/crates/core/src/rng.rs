//! Seeded random streams.
//!
//! Every draw comes from a ChaCha8 generator keyed by a 64-bit seed with a
//! separate stream id per purpose, so that adding a new consumer never
//! shifts the values seen by an existing one. Repetitions derive their own
//! seeds with SplitMix64.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream ids for the generators and Monte Carlo loops.
pub mod streams {
    pub const LABELS_X: u64 = 1;
    pub const LABELS_Y: u64 = 2;
    pub const SIGNAL_X: u64 = 3;
    pub const SIGNAL_Y: u64 = 4;
    pub const NOISE_X: u64 = 5;
    pub const NOISE_Y: u64 = 6;
    pub const PERTURB_Y: u64 = 7;
    pub const ORACLE: u64 = 8;
    pub const KMEANS: u64 = 9;
    pub const SUBSAMPLE: u64 = 10;
}

pub fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// SplitMix64 mixing of `(seed, index)`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
