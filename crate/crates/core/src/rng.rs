//! Seeded random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream selected by a
//! base seed plus a short path of indices (cell, trial, purpose, ...). The
//! stream for a given path does not depend on how many other streams were
//! drawn before it, so trials can run in any order or on any thread.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Random stream for `seed` and the index path `path`.
pub fn stream(seed: u64, path: &[u64]) -> StreamRng {
    let mut id = splitmix64(path.len() as u64);
    for &p in path {
        id = splitmix64(id ^ splitmix64(p));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}
