//! Cryptographic building blocks: hash commitments, a sloth-style VDF,
//! prime-order group arithmetic, Chaum-Pedersen DLEQ proofs and Schnorr
//! signatures.
//!
//! Every hash in the crate is SHA-256.

mod commitment;
pub mod encoding;
mod dleq;
mod group;
pub mod prime;
mod schnorr;
mod vdf;

pub use commitment::{commit, open, Commitment, NONCE_LEN};
pub use dleq::{dleq_prove, dleq_verify, DleqProof, DleqStatement};
pub use group::{group_setup, keygen, GroupParams, KeyPair};
pub use schnorr::{sign, verify_signature, Signature};
pub use vdf::{vdf_eval, vdf_invert, vdf_setup, vdf_verify, VdfOutput, VdfParams};

use num_bigint::BigUint;
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CryptoError {
    #[error("commitment nonce must be {expected} bytes, got {actual}")]
    NonceLength { expected: usize, actual: usize },
    #[error("security parameter {bits} bits is below the minimum of {min}")]
    SecurityTooSmall { bits: u64, min: u64 },
    #[error("VDF difficulty must be at least 1")]
    ZeroDifficulty,
    #[error("VDF checkpoint interval must be at least 1")]
    ZeroCheckpointInterval,
    #[error("malformed VDF proof: expected {expected} checkpoints, got {actual}")]
    ProofLength { expected: usize, actual: usize },
    #[error("invalid group parameters: {0}")]
    InvalidGroup(&'static str),
    #[error("element is not in the prime-order subgroup")]
    NotInSubgroup,
    #[error("witness does not satisfy the statement")]
    BadWitness,
    #[error("secret key must be in [1, q)")]
    InvalidSecret,
}

/// SHA-256 of `bytes`.
pub fn sha256(bytes: &[u8]) -> [u8; 32] {
    Sha256::digest(bytes).into()
}

/// SHA-256 of `bytes`, read as a big-endian integer and reduced mod `modulus`.
pub fn hash_to_int(bytes: &[u8], modulus: &BigUint) -> BigUint {
    BigUint::from_bytes_be(&sha256(bytes)) % modulus
}

/// Expands `bytes` to `len` pseudo-random bytes with SHA-256 in counter mode.
pub(crate) fn expand(bytes: &[u8], len: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(len + 32);
    let mut counter = 0u32;
    while out.len() < len {
        let mut h = Sha256::new();
        h.update(counter.to_be_bytes());
        h.update(bytes);
        out.extend_from_slice(&h.finalize());
        counter += 1;
    }
    out.truncate(len);
    out
}
