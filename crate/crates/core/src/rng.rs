//! Deterministic random streams.
//!
//! Every stochastic component draws from its own ChaCha stream keyed by the
//! run seed and a tag path, so schemes that share a tag path see identical
//! requests and fading.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub mod tag {
    pub const SCENARIO: u64 = 1;
    pub const REQUESTS: u64 = 2;
    pub const FADING: u64 = 3;
    pub const ORRA: u64 = 4;
    pub const WINNER: u64 = 5;
    pub const LEARNER: u64 = 6;
    pub const EXPLORE: u64 = 7;
    pub const REPLAY: u64 = 8;
    pub const VERIFY: u64 = 9;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream keyed by `seed` and an ordered tag path.
pub fn stream(seed: u64, tags: &[u64]) -> SimRng {
    let key = tags
        .iter()
        .fold(splitmix64(seed), |acc, &t| splitmix64(acc ^ splitmix64(t)));
    ChaCha8Rng::seed_from_u64(key)
}
