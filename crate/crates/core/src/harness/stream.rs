use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::solver::RandomInputs;

/// Purpose of a sample stream; distinct tags give independent streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StreamTag {
    Pilot,
    Estimation { replicate: u64 },
    Validation,
}

impl StreamTag {
    fn code(self) -> u64 {
        match self {
            StreamTag::Pilot => 0,
            StreamTag::Validation => 1,
            StreamTag::Estimation { replicate } => 2 + replicate,
        }
    }
}

impl fmt::Display for StreamTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StreamTag::Pilot => write!(f, "pilot"),
            StreamTag::Validation => write!(f, "validation"),
            StreamTag::Estimation { replicate } => write!(f, "estimation-{replicate}"),
        }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Random-access sequence of inputs: sample `n` depends only on the master
/// seed, the tag and `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleStream {
    master_seed: u64,
    tag: StreamTag,
    key: [u8; 32],
}

impl SampleStream {
    pub fn new(master_seed: u64, tag: StreamTag) -> Self {
        let mut state = master_seed ^ tag.code().wrapping_mul(0xd605_bbb5_8c8a_bd3d);
        let mut key = [0u8; 32];
        for chunk in key.chunks_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        SampleStream {
            master_seed,
            tag,
            key,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn tag(&self) -> StreamTag {
        self.tag
    }

    /// Twelve uniforms in `[0, 1)` for sample `n`, component `c` at position
    /// `c` of the block keyed by `n`.
    pub fn unit(&self, n: u64) -> [f64; 12] {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(n);
        let mut u = [0.0; 12];
        for v in u.iter_mut() {
            *v = rng.random::<f64>();
        }
        u
    }

    pub fn sample(&self, n: u64) -> RandomInputs {
        RandomInputs::from_unit(self.unit(n))
    }
}
