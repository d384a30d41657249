//! Reproducible random streams.
//!
//! Every stochastic routine takes a [`StreamSeed`]: a master seed plus a
//! stream index. The generator is ChaCha12, which is counter based, so the
//! stream index selects a disjoint keystream and replications can run in any
//! order or in parallel without overlapping.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::Serialize;

pub type Rng = ChaCha12Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct StreamSeed {
    pub master: u64,
    pub stream: u64,
}

impl StreamSeed {
    pub fn new(master: u64, stream: u64) -> Self {
        Self { master, stream }
    }

    /// Derives a child seed for sub-task `index` of this stream.
    ///
    /// The child keeps the master seed and mixes the index into the stream id,
    /// so children of distinct parents land on unrelated stream ids.
    pub fn child(self, index: u64) -> Self {
        let stream = splitmix64(self.stream ^ 0x9e37_79b9_7f4a_7c15).wrapping_add(index);
        Self {
            master: self.master,
            stream,
        }
    }

    pub fn rng(self) -> Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.master);
        rng.set_stream(self.stream);
        rng
    }
}

impl From<u64> for StreamSeed {
    fn from(master: u64) -> Self {
        Self { master, stream: 0 }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
