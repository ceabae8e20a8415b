//! Deterministic random streams.
//!
//! A run seed fans out into one ChaCha stream for the world and one per
//! peer, so adding a peer never perturbs the draws of the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

const WORLD_STREAM: u64 = 0;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replication `index` derived from a base seed.
pub fn replication_seed(base: u64, index: u32) -> u64 {
    mix64(base ^ mix64(u64::from(index)))
}

fn stream(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn world_rng(seed: u64) -> SimRng {
    stream(seed, WORLD_STREAM)
}

pub fn peer_rng(seed: u64, peer: u32) -> SimRng {
    stream(seed, u64::from(peer) + 1)
}
