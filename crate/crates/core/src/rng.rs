//! Seeded, splittable random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// The generator handed to every sampler.
pub type Rng = ChaCha8Rng;

/// A `(seed, stream)` pair naming one ChaCha8 keystream.
///
/// Streams that share a seed but differ in id never overlap, which is what
/// per-replicate parallelism relies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self) -> Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    /// A new seed family keyed by `tag`, for experiments with several phases.
    pub fn derive(&self, tag: u64) -> RngStream {
        RngStream::new(splitmix(self.seed ^ splitmix(tag.wrapping_add(self.stream))), 0)
    }

    pub fn substream(&self, id: u64) -> RngStream {
        RngStream::new(self.seed, id)
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Shorthand for `RngStream::new(seed, stream).rng()`.
pub fn stream(seed: u64, stream: u64) -> Rng {
    RngStream::new(seed, stream).rng()
}
