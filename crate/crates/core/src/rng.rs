//! Reproducible random streams.
//!
//! Every Monte Carlo replica owns one ChaCha stream derived from a master
//! seed and a stream index, so replicas can run in any order or in parallel
//! and still produce identical numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type Stream = ChaCha12Rng;

/// Random stream `index` of the family identified by `seed`.
pub fn stream(seed: u64, index: u64) -> Stream {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Stream index for a (purpose, replica) pair, keeping training and
/// evaluation draws of the same replica apart.
pub fn stream_index(purpose: u32, replica: u32) -> u64 {
    ((purpose as u64) << 32) | replica as u64
}
