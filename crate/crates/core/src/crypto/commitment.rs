use serde::{Deserialize, Serialize};

use super::{sha256, CryptoError};

/// Nonce length in bytes (256-bit hiding parameter).
pub const NONCE_LEN: usize = 32;

/// A 32-byte hash commitment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Commitment(#[serde(with = "hex_digest")] pub [u8; 32]);

impl Commitment {
    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }
}

/// `SHA-256(len(s) as u64 BE || s || r)`.
///
/// The length prefix keeps `(s, r)` pairs unambiguous when `s` has variable
/// length.
pub fn commit(s: &[u8], r: &[u8]) -> Result<Commitment, CryptoError> {
    if r.len() != NONCE_LEN {
        return Err(CryptoError::NonceLength {
            expected: NONCE_LEN,
            actual: r.len(),
        });
    }
    let mut buf = Vec::with_capacity(8 + s.len() + r.len());
    buf.extend_from_slice(&(s.len() as u64).to_be_bytes());
    buf.extend_from_slice(s);
    buf.extend_from_slice(r);
    Ok(Commitment(sha256(&buf)))
}

/// Accepts iff `commit(s, r) == c`. A nonce of the wrong length is an error,
/// not a rejection.
pub fn open(c: &Commitment, s: &[u8], r: &[u8]) -> Result<bool, CryptoError> {
    Ok(commit(s, r)? == *c)
}

mod hex_digest {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &[u8; 32], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(d))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[u8; 32], D::Error> {
        let s = String::deserialize(d)?;
        let v = hex::decode(s).map_err(D::Error::custom)?;
        v.try_into().map_err(|_| D::Error::custom("digest must be 32 bytes"))
    }
}
