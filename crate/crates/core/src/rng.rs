//! Deterministic RNG stream derivation.
//!
//! Every stochastic component of the simulator draws from its own stream,
//! derived from the experiment seed plus a structural address (episode, slot,
//! entity, purpose). Streams are independent of the order in which entities
//! are updated, so permuting the update order never changes any entity's
//! draw sequence.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Labels one stochastic purpose so different draws at the same structural
/// address never share a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamTag {
    Reset = 1,
    Mobility = 2,
    TaskGen = 3,
    FreqDeviation = 4,
    PositionNoise = 5,
    Policy = 6,
    Init = 7,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive an independent stream from the master seed and a structural address.
pub fn stream(seed: u64, tag: StreamTag, episode: u64, slot: u64, entity: u64) -> ChaCha8Rng {
    let mut h = splitmix64(seed);
    h = splitmix64(h ^ (tag as u64));
    h = splitmix64(h ^ episode);
    h = splitmix64(h ^ slot);
    h = splitmix64(h ^ entity);
    ChaCha8Rng::seed_from_u64(h)
}

/// A single long-lived stream (e.g. for policy sampling during training).
pub fn root_stream(seed: u64, tag: StreamTag) -> ChaCha8Rng {
    stream(seed, tag, 0, 0, 0)
}
