//! Child-seed derivation.
//!
//! Every random component gets its own stream. The child seed is the first
//! eight bytes (little endian) of
//! `SHA-256(master_le64 || component_utf8 || 0x00 || index_le64)`.
//! This mapping is part of the reproducibility contract and must not change.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type Rng = ChaCha8Rng;

pub fn child_seed(master: u64, component: &str, index: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update(component.as_bytes());
    hasher.update([0u8]);
    hasher.update(index.to_le_bytes());
    let digest = hasher.finalize();
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(head)
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn child_rng(master: u64, component: &str, index: u64) -> Rng {
    rng_from_seed(child_seed(master, component, index))
}
