//! Stable digests of configuration documents.

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;

/// Canonical JSON text of `value`: object keys sorted, no insignificant whitespace.
pub fn canonical_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    // `serde_json::Value` keeps object keys in a BTreeMap, so re-serializing sorts them.
    let v = serde_json::to_value(value)?;
    Ok(serde_json::to_string(&v)?)
}

/// Hex SHA-256 of the canonical JSON of `value`.
pub fn digest_of<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let text = canonical_json(value)?;
    Ok(Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect())
}
