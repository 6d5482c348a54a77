//! Deterministic RNG derivation.
//!
//! All randomness in an experiment flows from one root seed. Each unit of
//! work (a seed index, a stream, a task instance) gets its own generator
//! derived by mixing the root with a tag, so parallel and serial execution
//! see identical draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; good avalanche behavior for seed mixing.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Mix a root seed with a stream tag into a new seed.
pub fn mix(root: u64, tag: u64) -> u64 {
    splitmix64(root ^ splitmix64(tag.wrapping_add(0xa076_1d64_78bd_642f)))
}

/// Derive the RNG for one unit of work.
pub fn derive_rng(root: u64, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(root, tag))
}
