//! Hierarchical seed derivation.
//!
//! Every random draw in a run descends from one master seed. A [`SeedTree`]
//! node is a 64-bit value; children are derived by mixing the parent with a
//! purpose tag ([`Stream`]) or an integer counter through the SplitMix64
//! finalizer. Derivation is stateless, so the seed for "noise of frame 17 at
//! SNR point 3" is the same no matter what else the run drew before it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent randomness sources of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Bits,
    Channel,
    Noise,
    Init,
    Shuffle,
    Epsilon,
    Direction,
    Hpa,
    Data,
    Eval,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Bits => 1,
            Stream::Channel => 2,
            Stream::Noise => 3,
            Stream::Init => 4,
            Stream::Shuffle => 5,
            Stream::Epsilon => 6,
            Stream::Direction => 7,
            Stream::Hpa => 8,
            Stream::Data => 9,
            Stream::Eval => 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedTree(u64);

impl SeedTree {
    pub fn new(master: u64) -> Self {
        SeedTree(master)
    }

    pub fn seed(self) -> u64 {
        self.0
    }

    pub fn stream(self, stream: Stream) -> Self {
        SeedTree(splitmix64(self.0 ^ splitmix64(stream.tag().wrapping_mul(GOLDEN))))
    }

    pub fn child(self, index: u64) -> Self {
        SeedTree(splitmix64(splitmix64(self.0).wrapping_add(index.wrapping_mul(GOLDEN) ^ 0xA5A5)))
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
