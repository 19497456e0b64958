//! Seed derivation for reproducible, independently addressable streams.
//!
//! Every random object is drawn from a ChaCha8 stream addressed by
//! `(master, stream)`. ChaCha is counter based, so distinct stream ids give
//! independent sequences without any shared state, and the same address
//! yields the same bits on every platform. Nested addresses (replica, then
//! walk within the replica, ...) are formed with [`RngSeed::child`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type WalkRng = ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed {
    pub master: u64,
    pub stream: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngSeed {
    pub fn new(master: u64, stream: u64) -> Self {
        RngSeed { master, stream }
    }

    pub fn rng(&self) -> WalkRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(self.stream);
        rng
    }

    /// Address of sub-stream `lane` under this one. A pure function of
    /// `(master, stream, lane)`.
    pub fn child(&self, lane: u64) -> RngSeed {
        RngSeed {
            master: splitmix64(self.master ^ splitmix64(self.stream)),
            stream: lane,
        }
    }
}
