use sha2::{Digest, Sha256};

use crate::label::EntityKey;

/// SHA-256 over `record_id<TAB>entity_id<LF>` lines in sorted key order,
/// rendered as lowercase hex.
pub(crate) fn manifest_hash<'a>(keys: impl IntoIterator<Item = &'a EntityKey>) -> String {
    let mut keys: Vec<&EntityKey> = keys.into_iter().collect();
    keys.sort();
    let mut hasher = Sha256::new();
    for key in keys {
        hasher.update(key.record_id.as_bytes());
        hasher.update(b"\t");
        hasher.update(key.entity_id.as_bytes());
        hasher.update(b"\n");
    }
    to_hex(&hasher.finalize())
}

/// Seeded 64-bit digest of a string, stable across platforms and releases.
pub(crate) fn seeded_u64(seed: u64, text: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(text.as_bytes());
    let digest = hasher.finalize();
    let mut word = [0u8; 8];
    word.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(word)
}

fn to_hex(bytes: &[u8]) -> String {
    use std::fmt::Write;
    bytes.iter().fold(String::with_capacity(bytes.len() * 2), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}
