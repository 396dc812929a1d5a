//! Deterministic random streams.
//!
//! Every independent unit of work (a replica, a moment-sampling block) owns a
//! ChaCha8 generator keyed by the master seed and selected by a 64-bit stream
//! id. ChaCha is counter based, so distinct stream ids give non-overlapping
//! sequences and the output of a unit never depends on which worker ran it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Generator for stream `stream` under master `seed`.
pub fn stream(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream id for a two-level index (e.g. grid level and sample block).
pub fn substream_id(outer: u64, inner: u64) -> u64 {
    // 2^24 inner blocks per outer index is far more than any sampler uses.
    (outer << 24) | (inner & 0xff_ffff)
}
