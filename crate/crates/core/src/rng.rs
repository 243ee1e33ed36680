//! Labelled deterministic random streams.
//!
//! A run never shares one generator between concerns. Each concern
//! (`"topology"`, `"init"`, `"loop"`) owns a ChaCha20 stream keyed by
//! `SHA-256(seed_le || label)`, so adding draws to one concern never shifts
//! another and the sequences are identical on every platform.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

pub type Stream = ChaCha20Rng;

pub const TOPOLOGY: &str = "topology";
pub const INIT: &str = "init";
pub const LOOP: &str = "loop";

pub fn derive_stream(seed: u64, label: &str) -> Stream {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(label.as_bytes());
    let key: [u8; 32] = hasher.finalize().into();
    ChaCha20Rng::from_seed(key)
}
