use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, Zero};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::encoding::Encoder;
use super::{expand, prime, CryptoError};
use crate::serde_big;

/// Minimum modulus size accepted by [`group_setup`].
pub const MIN_GROUP_BITS: u64 = 32;

/// The order-`q` subgroup of `Z_p^*` for a safe prime `p = 2q + 1`, with two
/// generators whose relative discrete log is unknown.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupParams {
    #[serde(with = "serde_big")]
    pub p: BigUint,
    #[serde(with = "serde_big")]
    pub q: BigUint,
    /// Commitment base `g`.
    #[serde(with = "serde_big")]
    pub g: BigUint,
    /// Key base `G`.
    #[serde(rename = "G", with = "serde_big")]
    pub big_g: BigUint,
}

impl GroupParams {
    /// Validates explicit parameters.
    pub fn new(p: BigUint, g: BigUint, big_g: BigUint) -> Result<Self, CryptoError> {
        if p < BigUint::from(7u32) || !prime::is_prime(&p) {
            return Err(CryptoError::InvalidGroup("p must be prime"));
        }
        let q: BigUint = (&p - 1u32) >> 1;
        if !prime::is_prime(&q) {
            return Err(CryptoError::InvalidGroup("p must be a safe prime"));
        }
        let params = Self { p, q, g, big_g };
        if !params.contains(&params.g) || params.g.is_one() {
            return Err(CryptoError::InvalidGroup("g must generate the order-q subgroup"));
        }
        if !params.contains(&params.big_g) || params.big_g.is_one() {
            return Err(CryptoError::InvalidGroup("G must generate the order-q subgroup"));
        }
        Ok(params)
    }

    /// The toy group `p = 23, q = 11, g = 4, G = 9` used by the test fixtures.
    pub fn fixture_23() -> Self {
        Self::new(BigUint::from(23u32), BigUint::from(4u32), BigUint::from(9u32))
            .expect("valid fixture")
    }

    /// `1 ≤ e < p` and `e^q = 1`.
    pub fn contains(&self, e: &BigUint) -> bool {
        !e.is_zero() && e < &self.p && self.pow(e, &self.q).is_one()
    }

    pub fn pow(&self, base: &BigUint, exp: &BigUint) -> BigUint {
        base.modpow(exp, &self.p)
    }

    pub fn mul(&self, a: &BigUint, b: &BigUint) -> BigUint {
        a * b % &self.p
    }

    /// Uniform scalar in `[1, q)`.
    pub fn random_scalar<R: RngCore + ?Sized>(&self, rng: &mut R) -> BigUint {
        rng.gen_biguint_range(&BigUint::one(), &self.q)
    }

    /// Uniform scalar in `[0, q)`.
    pub fn random_exponent<R: RngCore + ?Sized>(&self, rng: &mut R) -> BigUint {
        rng.gen_biguint_below(&self.q)
    }

    /// Maps `tag` into the subgroup by squaring a hash-derived element.
    pub fn hash_to_subgroup(p: &BigUint, tag: &[u8]) -> BigUint {
        let width = (p.bits() as usize).div_ceil(8) + 16;
        for counter in 0u32.. {
            let mut input = Encoder::new();
            input.bytes(tag).int(p).u64(u64::from(counter));
            let h = BigUint::from_bytes_be(&expand(input.as_bytes(), width)) % p;
            let e = &h * &h % p;
            if !e.is_zero() && !e.is_one() {
                return e;
            }
        }
        unreachable!()
    }

    pub fn encode_into(&self, enc: &mut Encoder) {
        enc.int(&self.p).int(&self.q).int(&self.g).int(&self.big_g);
    }
}

/// Safe-prime group of `bits` bits derived from `seed`; `g` and `G` come from
/// hashing distinct domain tags into the subgroup.
pub fn group_setup(bits: u64, seed: &[u8]) -> Result<GroupParams, CryptoError> {
    if bits < MIN_GROUP_BITS {
        return Err(CryptoError::SecurityTooSmall {
            bits,
            min: MIN_GROUP_BITS,
        });
    }
    let (p, q) = prime::safe_prime(bits, seed);
    let g = GroupParams::hash_to_subgroup(&p, b"rig/generator/g");
    let big_g = GroupParams::hash_to_subgroup(&p, b"rig/generator/G");
    Ok(GroupParams { p, q, g, big_g })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyPair {
    #[serde(with = "serde_big")]
    pub secret: BigUint,
    #[serde(with = "serde_big")]
    pub public: BigUint,
}

impl KeyPair {
    pub fn from_secret(params: &GroupParams, secret: BigUint) -> Result<Self, CryptoError> {
        if secret.is_zero() || secret >= params.q {
            return Err(CryptoError::InvalidSecret);
        }
        let public = params.pow(&params.big_g, &secret);
        Ok(Self { secret, public })
    }
}

/// Deterministic key pair: `x = 1 + H(seed) mod (q - 1)`, `y = G^x`.
pub fn keygen(params: &GroupParams, seed: &[u8]) -> KeyPair {
    let mut input = Encoder::new();
    input.tag("rig/keygen").bytes(seed);
    params.encode_into(&mut input);
    let width = (params.q.bits() as usize).div_ceil(8) + 16;
    let x = BigUint::from_bytes_be(&expand(input.as_bytes(), width)) % (&params.q - 1u32) + 1u32;
    KeyPair::from_secret(params, x).expect("x in [1, q)")
}
