//! Named random sub-streams derived from a single root seed.
//!
//! Every consumer of randomness (basis sampling, phases, labelings, Monte-Carlo
//! draws) pulls from its own ChaCha stream, so changing how much one consumer
//! draws never perturbs another. Indexed sub-streams are disjoint windows of the
//! same keystream and give batch-parallel code results that do not depend on
//! the number of workers.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Words reserved per indexed sub-stream (2^36 u32 words ≈ 256 GiB of output).
const WINDOW_LOG2: u32 = 36;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedStreams {
    root: u64,
}

impl SeedStreams {
    pub fn new(root: u64) -> Self {
        SeedStreams { root }
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    pub fn stream(&self, name: &str) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.root);
        rng.set_stream(stream_id(name));
        rng
    }

    /// The `index`-th window of stream `name`.
    pub fn substream(&self, name: &str, index: u64) -> ChaCha20Rng {
        let mut rng = self.stream(name);
        rng.set_word_pos(u128::from(index) << WINDOW_LOG2);
        rng
    }
}

/// FNV-1a; stable across platforms and releases.
fn stream_id(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325_u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}
