//! Deterministic RNG substreams.
//!
//! Every random draw in a Monte Carlo run comes from a stream keyed by the
//! experiment seed plus the coordinates of the draw (sweep point, trial,
//! device, subcarrier, purpose). Results therefore do not depend on how
//! trials are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Purpose tags mixed into stream keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Channel = 1,
    Frame = 2,
    Noise = 3,
}

// splitmix64 finalizer
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hashes a seed and a sequence of coordinates into a stream seed.
pub fn stream_seed(seed: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(mix(seed), |acc, &p| {
        mix(acc ^ p.wrapping_add(0x9e37_79b9_7f4a_7c15))
    })
}

pub fn stream(seed: u64, parts: &[u64]) -> SimRng {
    SimRng::seed_from_u64(stream_seed(seed, parts))
}
