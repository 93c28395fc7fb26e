//! Deterministic RNG stream derivation.
//!
//! Every stochastic call site draws from a stream keyed by
//! (master seed, component label, indices...). No global RNG exists
//! anywhere in the crate, so shuffling the order in which prompts or
//! sweep cells are processed cannot change any individual result.
//!
//! The mixing function is splitmix64 applied to an fnv-style fold of the
//! key parts; the resulting u64 seeds a ChaCha8 stream.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x00000100000001b3;

fn fnv_fold(mut h: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Derive a ChaCha8 stream from a master seed, a component label, and
/// any number of integer indices (prompt id, iteration, candidate...).
pub fn derive_stream(master_seed: u64, label: &str, indices: &[u64]) -> Stream {
    let mut h = fnv_fold(FNV_OFFSET, &master_seed.to_le_bytes());
    h = fnv_fold(h, label.as_bytes());
    for &ix in indices {
        h = fnv_fold(h, &ix.to_le_bytes());
    }
    ChaCha8Rng::seed_from_u64(splitmix64(h))
}
