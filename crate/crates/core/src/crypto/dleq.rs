//! Chaum-Pedersen proof that `log_{g1} h1 = log_{g2} h2`, made
//! non-interactive with a SHA-256 challenge over the canonical encoding of
//! the statement and both announcements.

use num_bigint::BigUint;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::encoding::{DecodeError, Decoder, Encoder};
use super::{hash_to_int, CryptoError, GroupParams};
use crate::serde_big;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DleqStatement {
    pub g1: BigUint,
    pub h1: BigUint,
    pub g2: BigUint,
    pub h2: BigUint,
}

impl DleqStatement {
    pub fn new(g1: BigUint, h1: BigUint, g2: BigUint, h2: BigUint) -> Self {
        Self { g1, h1, g2, h2 }
    }

    fn in_group(&self, params: &GroupParams) -> bool {
        [&self.g1, &self.h1, &self.g2, &self.h2]
            .into_iter()
            .all(|e| params.contains(e))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DleqProof {
    #[serde(with = "serde_big")]
    pub challenge: BigUint,
    #[serde(with = "serde_big")]
    pub response: BigUint,
}

impl DleqProof {
    pub fn encode_into(&self, enc: &mut Encoder) {
        enc.int(&self.challenge).int(&self.response);
    }

    pub fn decode_from(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        Ok(Self {
            challenge: dec.int("dleq.challenge")?,
            response: dec.int("dleq.response")?,
        })
    }
}

fn challenge(params: &GroupParams, stmt: &DleqStatement, a1: &BigUint, a2: &BigUint) -> BigUint {
    let mut enc = Encoder::new();
    enc.tag("rig/dleq");
    params.encode_into(&mut enc);
    enc.ints([&stmt.g1, &stmt.h1, &stmt.g2, &stmt.h2, a1, a2]);
    hash_to_int(enc.as_bytes(), &params.q)
}

pub fn dleq_prove<R: RngCore + ?Sized>(
    params: &GroupParams,
    stmt: &DleqStatement,
    witness: &BigUint,
    rng: &mut R,
) -> Result<DleqProof, CryptoError> {
    if !stmt.in_group(params) {
        return Err(CryptoError::NotInSubgroup);
    }
    if params.pow(&stmt.g1, witness) != stmt.h1 || params.pow(&stmt.g2, witness) != stmt.h2 {
        return Err(CryptoError::BadWitness);
    }
    let w = params.random_exponent(rng);
    let a1 = params.pow(&stmt.g1, &w);
    let a2 = params.pow(&stmt.g2, &w);
    let e = challenge(params, stmt, &a1, &a2);
    let q = &params.q;
    let xe = witness % q * &e % q;
    let z = (w + q - xe) % q;
    Ok(DleqProof {
        challenge: e,
        response: z,
    })
}

/// Accepts iff the proof is valid; statements with elements outside the
/// subgroup are rejected.
pub fn dleq_verify(params: &GroupParams, stmt: &DleqStatement, proof: &DleqProof) -> bool {
    if !stmt.in_group(params) || proof.challenge >= params.q || proof.response >= params.q {
        return false;
    }
    let a1 = params.mul(
        &params.pow(&stmt.g1, &proof.response),
        &params.pow(&stmt.h1, &proof.challenge),
    );
    let a2 = params.mul(
        &params.pow(&stmt.g2, &proof.response),
        &params.pow(&stmt.h2, &proof.challenge),
    );
    challenge(params, stmt, &a1, &a2) == proof.challenge
}
