//! Seed derivation for independent, reproducible random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// The generator used for every random stream in the crate.
pub type StreamRng = ChaCha8Rng;

/// Derives a child seed as `master XOR H(role, index)`, where `H` takes the
/// first eight bytes of a SHA-256 digest.
pub fn child_seed(master: u64, role: &str, index: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(role.as_bytes());
    h.update([0u8]);
    h.update(index.to_le_bytes());
    let digest = h.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    master ^ u64::from_le_bytes(bytes)
}

/// A generator seeded from [`child_seed`].
pub fn child_rng(master: u64, role: &str, index: u64) -> StreamRng {
    StreamRng::seed_from_u64(child_seed(master, role, index))
}
