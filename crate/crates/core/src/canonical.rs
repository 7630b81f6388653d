//! Canonical JSON: UTF-8, lexicographically sorted object keys, no
//! insignificant whitespace. These bytes feed transcripts and ledger hashes.

use serde::de::DeserializeOwned;
use serde::Serialize;

/// Serialize `value` to canonical JSON bytes.
///
/// Keys are sorted by round-tripping through `serde_json::Value`, whose
/// object map is ordered.
pub fn to_vec<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    let v = serde_json::to_value(value).expect("serializable value");
    serde_json::to_vec(&v).expect("json value serializes")
}

pub fn to_string<T: Serialize + ?Sized>(value: &T) -> String {
    String::from_utf8(to_vec(value)).expect("json is utf-8")
}

/// Parse `bytes` and require that they are already in canonical form.
pub fn from_slice_strict<T: Serialize + DeserializeOwned>(bytes: &[u8]) -> Option<T> {
    let value: T = serde_json::from_slice(bytes).ok()?;
    if to_vec(&value) == bytes {
        Some(value)
    } else {
        None
    }
}
