//! Schnorr signatures over the key base `G`, used to authenticate protocol
//! messages. The signed payload is always a canonical encoding.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use super::encoding::{DecodeError, Decoder, Encoder};
use super::{expand, hash_to_int, GroupParams, KeyPair};
use crate::serde_big;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Signature {
    #[serde(with = "serde_big")]
    pub challenge: BigUint,
    #[serde(with = "serde_big")]
    pub response: BigUint,
}

impl Signature {
    pub fn encode_into(&self, enc: &mut Encoder) {
        enc.int(&self.challenge).int(&self.response);
    }

    pub fn decode_from(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        Ok(Self {
            challenge: dec.int("sig.challenge")?,
            response: dec.int("sig.response")?,
        })
    }
}

fn challenge(params: &GroupParams, public: &BigUint, commitment: &BigUint, msg: &[u8]) -> BigUint {
    let mut enc = Encoder::new();
    enc.tag("rig/schnorr");
    params.encode_into(&mut enc);
    enc.int(public).int(commitment).bytes(msg);
    hash_to_int(enc.as_bytes(), &params.q)
}

/// Deterministic signature; the nonce is derived from the secret key and the
/// message.
pub fn sign(params: &GroupParams, key: &KeyPair, msg: &[u8]) -> Signature {
    let mut seed = Encoder::new();
    seed.tag("rig/schnorr-nonce").int(&key.secret).bytes(msg);
    let width = (params.q.bits() as usize).div_ceil(8) + 16;
    let k = BigUint::from_bytes_be(&expand(seed.as_bytes(), width)) % (&params.q - 1u32) + 1u32;
    let r = params.pow(&params.big_g, &k);
    let e = challenge(params, &key.public, &r, msg);
    let q = &params.q;
    let z = (k + &key.secret * &e) % q;
    Signature {
        challenge: e,
        response: z,
    }
}

/// Recomputes `R = G^z · y^{-e}` and checks the challenge.
pub fn verify_signature(params: &GroupParams, public: &BigUint, msg: &[u8], sig: &Signature) -> bool {
    if !params.contains(public) || sig.challenge >= params.q || sig.response >= params.q {
        return false;
    }
    let neg_e = (&params.q - &sig.challenge) % &params.q;
    let r = params.mul(
        &params.pow(&params.big_g, &sig.response),
        &params.pow(public, &neg_e),
    );
    challenge(params, public, &r, msg) == sig.challenge
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::{group_setup, keygen};

    #[test]
    fn sign_verify() {
        let params = group_setup(64, b"sig").unwrap();
        let alice = keygen(&params, b"alice");
        let bob = keygen(&params, b"bob");
        let sig = sign(&params, &alice, b"hello");
        assert!(verify_signature(&params, &alice.public, b"hello", &sig));
        assert!(!verify_signature(&params, &alice.public, b"hellp", &sig));
        assert!(!verify_signature(&params, &bob.public, b"hello", &sig));
        let mut bad = sig.clone();
        bad.response = (&bad.response + 1u32) % &params.q;
        assert!(!verify_signature(&params, &alice.public, b"hello", &bad));
        assert_eq!(sig, sign(&params, &alice, b"hello"));
    }
}
