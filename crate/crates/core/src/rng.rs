//! Counter-based random streams.
//!
//! Every replica of an experiment draws from its own ChaCha8 stream: the key
//! is derived from the experiment seed, the stream id is the replica index,
//! and the keystream position advances with the path step. Replica `r`
//! therefore sees the same numbers no matter which worker runs it or in what
//! order replicas are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Sub-experiment tags, mixed into the key so unrelated sweeps never share
/// streams under the same seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamKey {
    pub seed: u64,
    pub tag: u64,
}

impl StreamKey {
    pub fn new(seed: u64) -> Self {
        StreamKey { seed, tag: 0 }
    }

    pub fn with_tag(self, tag: u64) -> Self {
        StreamKey { tag, ..self }
    }

    pub fn replica(&self, index: u64) -> Stream {
        replica_stream(self.seed ^ splitmix64(self.tag.wrapping_add(0x5851_f42d)), index)
    }
}

/// Stream for replica `index` of the experiment keyed by `seed`.
pub fn replica_stream(seed: u64, index: u64) -> Stream {
    let mut key = [0u8; 32];
    let mut s = seed;
    for chunk in key.chunks_mut(8) {
        s = splitmix64(s);
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
