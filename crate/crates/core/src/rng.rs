//! Seeded random-number streams.
//!
//! All stochastic operations in this crate draw from ChaCha12 generators.
//! A master seed plus a stream index select one of 2^64 independent streams,
//! so concurrent workers (EM restarts, bootstrap ensemble members) produce
//! the same draws regardless of scheduling order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Generator for the given `(master seed, stream index)` pair.
pub fn stream_rng(master_seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}
