//! Reproducible random streams.
//!
//! Every stream is a ChaCha8 keystream addressed by `(seed, stream id,
//! counter)`. Replica `r` of an experiment always reads stream `r`, so the
//! numbers it sees do not depend on how replicas are scheduled on threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type RngState = ChaCha8Rng;

/// Opens stream `stream` of the generator keyed by `seed`, positioned at
/// counter zero.
pub fn stream(seed: u64, stream: u64) -> RngState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives an independent sub-seed, e.g. for the second phase of an
/// experiment that must not reuse the streams of the first.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
