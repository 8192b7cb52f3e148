//! Seeded random number generation.
//!
//! Every stochastic operation takes an explicit generator. Sub-streams are
//! derived from a master seed with a fixed mixing function so that a run is
//! replayable from its seed alone.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

/// Named purposes for derived streams. Keeping them distinct guarantees that,
/// for example, initialization draws never alias negative-sampling draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Init = 1,
    TrainNegatives = 2,
    Shuffle = 3,
    TestNegatives = 4,
    Sweep = 5,
    Misc = 6,
}

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for `(seed, stream, index)`; `index` is usually the epoch.
pub fn derive(seed: u64, stream: Stream, index: u64) -> SeededRng {
    let mixed = splitmix64(splitmix64(seed ^ splitmix64(stream as u64)) ^ index);
    ChaCha8Rng::seed_from_u64(mixed)
}

/// Derived plain seed, for components that accept a `u64`.
pub fn derive_seed(seed: u64, stream: Stream, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(stream as u64)) ^ index.wrapping_add(0x5851_f42d))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn derived_streams_are_reproducible_and_distinct() {
        let a: u64 = derive(7, Stream::Shuffle, 3).random();
        let b: u64 = derive(7, Stream::Shuffle, 3).random();
        let c: u64 = derive(7, Stream::Shuffle, 4).random();
        let d: u64 = derive(7, Stream::TrainNegatives, 3).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }
}
