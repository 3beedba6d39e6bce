//! Deterministic seed splitting.
//!
//! Every randomized component (code matrices, channel traces, source streams)
//! is keyed by a 64-bit seed derived from one master seed, a short role tag,
//! and integer indices. Hashing rather than offsetting keeps unrelated streams
//! statistically independent and makes any cell of an experiment re-runnable
//! in isolation.

use sha2::{Digest, Sha256};

/// Derives a child seed from a master seed, a role tag, and indices.
pub(crate) fn derive(master: u64, tag: &str, parts: &[u64]) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update([0xFF]);
    h.update(tag.as_bytes());
    for p in parts {
        h.update([0xFE]);
        h.update(p.to_le_bytes());
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}
