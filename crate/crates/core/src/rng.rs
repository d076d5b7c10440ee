//! Reproducible random streams.
//!
//! Every stochastic operation takes an explicit generator. Parallel work gets
//! one ChaCha stream per task, keyed by `(seed, task index)`, so results do not
//! depend on how tasks are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type RandomStream = ChaCha8Rng;

/// Master stream for a seed.
pub fn stream(seed: u64) -> RandomStream {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent substream `index` of the master seed.
pub fn substream(seed: u64, index: u64) -> RandomStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Derives a child seed, used when one seed must drive several scenario cells.
pub fn child_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
