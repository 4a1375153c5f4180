//! Seeded, splittable randomness.
//!
//! Monte Carlo work is cut into fixed-size batches and batch `b` always draws
//! from the same ChaCha stream, so results do not depend on how many threads
//! the batches are spread over.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Rows per Monte Carlo batch. Part of the reproducibility contract: changing
/// it changes every seeded result.
pub const BATCH_SIZE: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct SeededRng {
    pub seed: u64,
    pub stream: u64,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self { seed, stream: 0 }
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// An independent child, e.g. one per restart or per test case.
    pub fn substream(&self, index: u64) -> Self {
        Self {
            seed: self.seed,
            stream: splitmix64(self.stream ^ splitmix64(index.wrapping_add(0x5851_f42d_4c95_7f2d))),
        }
    }

    /// Generator for batch `batch` of a batched computation.
    pub fn batch(&self, batch: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(self.seed ^ splitmix64(self.stream)));
        rng.set_stream(batch);
        rng
    }

    /// A single generator for sequential (non-batched) use.
    pub fn generator(&self) -> ChaCha8Rng {
        self.batch(u64::MAX)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Number of batches needed to cover `n` rows.
pub(crate) fn batch_count(n: usize) -> usize {
    n.div_ceil(BATCH_SIZE)
}
