//! Seeded random streams.
//!
//! Every run derives its component generators from one `u64` seed using
//! ChaCha8 stream splitting, so learner draws never perturb environment
//! draws and logs are bit-identical across repeated runs.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Run-local random source with independent substreams per component.
pub type RunRng = ChaCha8Rng;

/// Substream tags for the fixed components of a training run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Env = 0,
    Learner = 1,
    Attack = 2,
    Eval = 3,
    Init = 4,
}

/// Derives the generator for one component of a seeded run.
pub fn substream(seed: u64, stream: Stream) -> RunRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}
