//! Reproducible per-user random streams.
//!
//! A trial is identified by a 64-bit seed. Every simulated user draws from a
//! stream keyed by `(seed, stage, user)`, so the outcome of a trial does not
//! depend on scheduling and users never share generator state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Protocol stages that consume randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Stage {
    Projection = 1,
    Gnam = 2,
    SecondRound = 3,
    SecondRoundAux = 4,
    Degree = 5,
    Attack = 6,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedStream {
    seed: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Generator for one user at one stage.
    pub fn user(&self, stage: Stage, user: usize) -> StreamRng {
        let key = splitmix64(self.seed ^ splitmix64(stage as u64));
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        rng.set_stream(user as u64);
        rng
    }

    /// Generator for a stage-wide draw that is not tied to one user.
    pub fn stage(&self, stage: Stage) -> StreamRng {
        self.user(stage, usize::MAX)
    }

    /// Seed of the `index`-th trial derived from this one.
    pub fn trial(&self, index: usize) -> SeedStream {
        SeedStream::new(splitmix64(self.seed.wrapping_add(splitmix64(index as u64 + 1))))
    }
}
