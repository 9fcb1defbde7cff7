//! Canonical encoding and content digests.
//!
//! Canonical bytes are compact UTF-8 JSON with lexicographically sorted object
//! keys. Decimals are already strings with exactly nine fractional digits (see
//! [`crate::Dec`]), so the encoding carries no platform-dependent numerics.

use std::fmt;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest as _, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CanonicalError {
    #[error("canonical encoding failed: {0}")]
    Encode(String),
    #[error("canonical decoding failed: {0}")]
    Decode(String),
    #[error("bytes are not in canonical form")]
    NotCanonical,
}

/// A 32-byte SHA-256 digest rendered as lowercase hex.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Digest(pub [u8; 32]);

impl Digest {
    pub fn of(bytes: &[u8]) -> Self {
        Digest(Sha256::digest(bytes).into())
    }

    /// Digest over several byte strings, each length-prefixed so that
    /// boundaries are unambiguous.
    pub fn of_parts(parts: &[&[u8]]) -> Self {
        let mut h = Sha256::new();
        for p in parts {
            h.update((p.len() as u64).to_be_bytes());
            h.update(p);
        }
        Digest(h.finalize().into())
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", self.to_hex())
    }
}

impl FromStr for Digest {
    type Err = hex::FromHexError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = [0u8; 32];
        hex::decode_to_slice(s.trim(), &mut out)?;
        Ok(Digest(out))
    }
}

impl Serialize for Digest {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Digest {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Canonical bytes of any serializable value.
pub fn to_canonical_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, CanonicalError> {
    // serde_json::Value keeps object keys in a BTreeMap, which sorts them.
    let v = serde_json::to_value(value).map_err(|e| CanonicalError::Encode(e.to_string()))?;
    if contains_float(&v) {
        return Err(CanonicalError::Encode("binary floating point is not canonical".into()));
    }
    serde_json::to_vec(&v).map_err(|e| CanonicalError::Encode(e.to_string()))
}

pub fn canonical_digest<T: Serialize>(value: &T) -> Result<Digest, CanonicalError> {
    Ok(Digest::of(&to_canonical_bytes(value)?))
}

/// Decode canonical bytes, rejecting input that does not re-encode to the same bytes.
pub fn from_canonical_bytes<T: Serialize + DeserializeOwned>(bytes: &[u8]) -> Result<T, CanonicalError> {
    let value: T = serde_json::from_slice(bytes).map_err(|e| CanonicalError::Decode(e.to_string()))?;
    if to_canonical_bytes(&value)? != bytes {
        return Err(CanonicalError::NotCanonical);
    }
    Ok(value)
}

fn contains_float(v: &serde_json::Value) -> bool {
    match v {
        serde_json::Value::Number(n) => n.is_f64(),
        serde_json::Value::Array(a) => a.iter().any(contains_float),
        serde_json::Value::Object(o) => o.values().any(contains_float),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            Digest::of(b"abc").to_hex(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn keys_are_sorted_and_compact() {
        let mut m = HashMap::new();
        m.insert("zeta", 1);
        m.insert("alpha", 2);
        m.insert("mid", 3);
        let bytes = to_canonical_bytes(&m).unwrap();
        assert_eq!(bytes, br#"{"alpha":2,"mid":3,"zeta":1}"#);
    }

    #[test]
    fn floats_are_refused() {
        assert!(to_canonical_bytes(&1.5f64).is_err());
    }

    #[test]
    fn non_canonical_input_is_rejected() {
        let r: Result<HashMap<String, u32>, _> = from_canonical_bytes(br#"{ "a": 1 }"#);
        assert!(matches!(r, Err(CanonicalError::NotCanonical)));
        let ok: HashMap<String, u32> = from_canonical_bytes(br#"{"a":1}"#).unwrap();
        assert_eq!(ok["a"], 1);
    }

    #[test]
    fn digest_hex_roundtrip() {
        let d = Digest::of(b"x");
        assert_eq!(d.to_hex().parse::<Digest>().unwrap(), d);
    }
}
