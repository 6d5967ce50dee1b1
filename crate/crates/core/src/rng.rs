//! Deterministic random streams keyed by (seed, domain, counters).
//!
//! Every random draw in the simulator comes from a stream derived purely from
//! a master seed, a domain tag, and stable identifiers (instance index,
//! component name, path id). This makes results independent of evaluation
//! order and thread count, and keeps a component's realization stable when
//! other parts of the design change.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// FNV-1a, 64-bit. Stable across platforms and Rust versions, unlike the
/// stdlib hasher.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Stream keyed by two numeric counters.
pub fn stream(seed: u64, domain: &str, a: u64, b: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&fnv1a64(domain.as_bytes()).to_le_bytes());
    key[16..24].copy_from_slice(&a.to_le_bytes());
    key[24..32].copy_from_slice(&b.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Stream keyed by a numeric counter and a component name.
pub fn named_stream(seed: u64, domain: &str, a: u64, name: &str) -> ChaCha8Rng {
    stream(seed, domain, a, fnv1a64(name.as_bytes()))
}
