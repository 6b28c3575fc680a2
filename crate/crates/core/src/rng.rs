//! Seed derivation for reproducible ensembles.
//!
//! Every path in an ensemble draws from its own ChaCha8 stream. The stream
//! key is `splitmix64(master ^ splitmix64(index))`, so path `i` of a run
//! sees the same numbers regardless of how the ensemble is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type PathRng = ChaCha8Rng;

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed for path `index` of an ensemble keyed by `master`.
pub fn stream_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index))
}

pub fn rng_from_seed(seed: u64) -> PathRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn path_rng(master: u64, index: u64) -> PathRng {
    rng_from_seed(stream_seed(master, index))
}
