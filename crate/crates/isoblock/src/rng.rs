//! Seed plumbing. Every stochastic operation takes an explicit seed and
//! derives non-overlapping streams from it, so runs replay bit-for-bit
//! and parallel workers never share generator state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Root generator for a seed (stream 0).
pub fn root(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream_id` of the generator for `seed`.
pub fn stream(seed: u64, stream_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}
