//! Seeded, splittable random streams.
//!
//! All sampling goes through ChaCha8 keyed by a 64-bit seed, with the 64-bit
//! stream id selecting an independent substream. Work split into chunks gets
//! one substream per chunk, which keeps parallel results independent of
//! scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Stream id reserved for drawing experiment datasets.
pub const DATA_STREAM: u64 = 0;
/// First stream id used by Monte Carlo chunks; chunk `i` uses `MC_STREAM_BASE + i`.
pub const MC_STREAM_BASE: u64 = 1 << 32;

pub fn substream(seed: u64, stream: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
