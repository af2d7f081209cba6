//! Deterministic seed derivation.
//!
//! Every stochastic component takes one root seed; substreams are derived by
//! hashing the root with a component label via FNV-1a, which is stable across
//! platforms and releases (unlike the std hasher).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(seed: u64, bytes: &[u8]) -> u64 {
    let mut hash = seed;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// Derive a substream seed from a root seed and a label.
pub fn derive_seed(root: u64, label: &str) -> u64 {
    let mut hash = FNV_OFFSET;
    hash = fnv1a(hash, &root.to_le_bytes());
    fnv1a(hash, label.as_bytes())
}

/// A seeded RNG for the labelled substream.
pub fn stream_rng(root: u64, label: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(root, label))
}
