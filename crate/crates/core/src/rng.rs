//! Counter-based random stream splitting.
//!
//! Every random stream in a run is a ChaCha8 generator keyed by the master
//! seed, with the ChaCha stream id derived from a `(purpose, index, replica)`
//! triple:
//!
//! ```text
//! stream = mix(mix(mix(purpose) ^ index) ^ replica)
//! ```
//!
//! where `mix` is the SplitMix64 finalizer. The rule is frozen: changing it
//! changes every output file. Streams never depend on thread scheduling, so
//! a realization regenerated on any worker is bit-identical.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used for all Monte Carlo work.
pub type SimRng = ChaCha8Rng;

/// What a stream is used for. The discriminant enters the stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamPurpose {
    Disorder = 1,
    WormChain = 2,
    MetropolisChain = 3,
    Integration = 4,
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream_id(purpose: StreamPurpose, index: u64, replica: u64) -> u64 {
    mix64(mix64(mix64(purpose as u64) ^ index) ^ replica)
}

/// Independent generator for `(purpose, index, replica)` under `master_seed`.
pub fn stream(master_seed: u64, purpose: StreamPurpose, index: u64, replica: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream_id(purpose, index, replica));
    rng
}
