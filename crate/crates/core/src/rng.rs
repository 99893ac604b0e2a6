//! Counter-based random streams.
//!
//! Every random draw in a simulation is addressed by `(master seed, trial,
//! generation, couple type)`. The master seed fixes a ChaCha8 key, the trial
//! index selects the ChaCha stream, and `(generation, type)` selects a block
//! offset inside that stream. Trials can therefore run in any order, on any
//! number of threads, and still reproduce bit for bit.
//!
//! Drawing couples of one type sequentially from their own block also gives
//! the prefix coupling used by the monotone-coupling checks: a run with fewer
//! couples of type `i` sees exactly the first draws of a run with more.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

const GENERATION_SHIFT: u32 = 44;
const TYPE_SHIFT: u32 = 32;
const MAX_GENERATION: u64 = 1 << (68 - GENERATION_SHIFT);
const MAX_TYPES: usize = 1 << (GENERATION_SHIFT - TYPE_SHIFT);

/// Reserved stream ids for non-simulation uses of randomness.
pub mod purpose {
    pub const EIGEN_STARTS: u64 = u64::MAX;
    pub const SUPERADDITIVITY: u64 = u64::MAX - 1;
    pub const MEAN_ESTIMATION: u64 = u64::MAX - 2;
    pub const FINITENESS: u64 = u64::MAX - 3;
    pub const PROPERTY_SAMPLES: u64 = u64::MAX - 4;
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn key_from_seed(seed: u64) -> [u8; 32] {
    let mut state = seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    key
}

/// Derives an independent master seed from `(seed, tag)`.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut state = seed ^ tag.wrapping_mul(0xD605_BBB5_8C8A_BBFD);
    splitmix64(&mut state)
}

/// A standalone stream `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::from_seed(key_from_seed(seed));
    rng.set_stream(stream);
    rng
}

/// Random streams of one simulated trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialStreams {
    pub seed: u64,
    pub trial: u64,
}

impl TrialStreams {
    pub fn new(seed: u64, trial: u64) -> Self {
        Self { seed, trial }
    }

    /// Streams for producing generation `generation` (the draws that turn
    /// `Z_{generation-1}` into `W_generation`).
    pub fn generation(&self, generation: u64) -> GenerationRng {
        assert!(generation < MAX_GENERATION, "generation index out of range");
        GenerationRng {
            key: key_from_seed(self.seed),
            trial: self.trial,
            generation,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GenerationRng {
    key: [u8; 32],
    trial: u64,
    generation: u64,
}

impl GenerationRng {
    /// The stream used for couples of type `couple_type`.
    pub fn stream(&self, couple_type: usize) -> SimRng {
        assert!(couple_type < MAX_TYPES, "too many couple types");
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(self.trial);
        let pos =
            ((self.generation as u128) << GENERATION_SHIFT) | ((couple_type as u128) << TYPE_SHIFT);
        rng.set_word_pos(pos);
        rng
    }
}
