//! Seeded random streams.
//!
//! Every random draw in the crate comes from ChaCha8 (`rand_chacha`), a
//! counter-based generator. A run seed selects the key and each consumer
//! (stream noise, network init, observation noise, action sampling) reads
//! its own ChaCha stream id, so consumers never share a sequence.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Name recorded in run provenance.
pub const RNG_ALGORITHM: &str = "chacha8";

pub const STREAM_SYNTH: u64 = 1;
pub const STREAM_NET_INIT: u64 = 2;
pub const STREAM_ENV: u64 = 3;
pub const STREAM_ACTION: u64 = 4;
pub const STREAM_EVAL: u64 = 5;

pub fn stream(seed: u64, stream_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}
