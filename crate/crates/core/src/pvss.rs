//! `(t, n)` publicly verifiable secret sharing over a prime-order group.
//!
//! Participant `i` (1-based) holds `x_i` with public key `y_i = G^{x_i}`.
//! The dealer samples a polynomial `p` of degree `t - 1` over `Z_q` whose
//! constant term is a uniform exponent `r`, and publishes
//!
//! * `C_j = g^{α_j}` for each coefficient,
//! * `Y_i = y_i^{p(i)}` for each participant, with a DLEQ proof that
//!   `log_g X_i = log_{y_i} Y_i` where `X_i = ∏_j C_j^{i^j}`,
//! * `U = (s + h(G^r)) mod m`, where `h` hashes the canonical encoding of a
//!   group element and reduces it mod `m`.
//!
//! Participant `i` decrypts `S_i = Y_i^{1/x_i} = G^{p(i)}` and proves it
//! correct. Any `t` valid shares give `G^r = G^{p(0)}` by Lagrange
//! interpolation in the exponent, and so `s = U - h(G^r)`.
//!
//! Reading note: the pooled value is `G^{p(0)}` with `p(0) = r` an exponent.
//! A constant term that is itself a group element would not type-check with
//! the rest of the construction.

use std::collections::BTreeSet;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::encoding::{DecodeError, Decoder, Encoder};
use crate::crypto::prime::mod_inverse;
use crate::crypto::{
    dleq_prove, dleq_verify, hash_to_int, CryptoError, DleqProof, DleqStatement, GroupParams,
    KeyPair,
};
use crate::serde_big;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PvssError {
    #[error("threshold must satisfy 1 <= t <= n (t = {t}, n = {n})")]
    InvalidThreshold { t: usize, n: usize },
    #[error("{n} participants do not fit in a group of order {q}")]
    TooManyParticipants { n: usize, q: BigUint },
    #[error("public key {0} is not a valid group element")]
    InvalidKey(usize),
    #[error("output modulus must be at least 1")]
    ZeroModulus,
    #[error("secret must be below the output modulus")]
    SecretOutOfRange,
    #[error("participant index {index} out of range 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("key pair does not match public key {0}")]
    WrongKey(usize),
    #[error("need {need} shares, got {have}")]
    InsufficientShares { have: usize, need: usize },
    #[error("share index {0} appears more than once")]
    DuplicateIndex(usize),
    #[error("share {0} failed verification")]
    InvalidShare(usize),
    #[error("dealer bundle failed verification")]
    InvalidBundle,
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

pub type Result<T> = std::result::Result<T, PvssError>;

/// Everything a dealer publishes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DealerBundle {
    pub session_id: u64,
    pub dealer: u64,
    /// Output modulus `m` that `U` is reduced by.
    #[serde(with = "serde_big")]
    pub modulus: BigUint,
    /// `U = (s + h(G^r)) mod m`.
    #[serde(with = "serde_big")]
    pub masked_secret: BigUint,
    /// `C_0, …, C_{t-1}`.
    #[serde(with = "serde_big::vec")]
    pub commitments: Vec<BigUint>,
    /// `Y_1, …, Y_n`.
    #[serde(with = "serde_big::vec")]
    pub encrypted_shares: Vec<BigUint>,
    pub proofs: Vec<DleqProof>,
}

const BUNDLE_TAG: &str = "rig/pvss/bundle";
const SHARE_TAG: &str = "rig/pvss/share";

impl DealerBundle {
    pub fn threshold(&self) -> usize {
        self.commitments.len()
    }

    pub fn participants(&self) -> usize {
        self.encrypted_shares.len()
    }

    pub fn encode_into(&self, enc: &mut Encoder) {
        enc.tag(BUNDLE_TAG)
            .u64(self.session_id)
            .u64(self.dealer)
            .int(&self.modulus)
            .int(&self.masked_secret)
            .u64(self.commitments.len() as u64)
            .ints(&self.commitments)
            .u64(self.encrypted_shares.len() as u64)
            .ints(&self.encrypted_shares);
        for proof in &self.proofs {
            proof.encode_into(enc);
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut enc = Encoder::new();
        self.encode_into(&mut enc);
        enc.into_bytes()
    }

    pub fn decode_from(dec: &mut Decoder<'_>) -> std::result::Result<Self, DecodeError> {
        dec.expect_tag(BUNDLE_TAG)?;
        let session_id = dec.u64("bundle.session_id")?;
        let dealer = dec.u64("bundle.dealer")?;
        let modulus = dec.int("bundle.modulus")?;
        let masked_secret = dec.int("bundle.masked_secret")?;
        let t = read_count(dec, "bundle.t")?;
        let commitments = (0..t)
            .map(|_| dec.int("bundle.commitment"))
            .collect::<std::result::Result<_, _>>()?;
        let n = read_count(dec, "bundle.n")?;
        let encrypted_shares = (0..n)
            .map(|_| dec.int("bundle.share"))
            .collect::<std::result::Result<_, _>>()?;
        let proofs = (0..n)
            .map(|_| DleqProof::decode_from(dec))
            .collect::<std::result::Result<_, _>>()?;
        Ok(Self {
            session_id,
            dealer,
            modulus,
            masked_secret,
            commitments,
            encrypted_shares,
            proofs,
        })
    }

    pub fn from_bytes(bytes: &[u8]) -> std::result::Result<Self, DecodeError> {
        let mut dec = Decoder::new(bytes);
        let out = Self::decode_from(&mut dec)?;
        dec.finish()?;
        Ok(out)
    }
}

// Counts bound the allocation done by a decoder on hostile input.
fn read_count(dec: &mut Decoder<'_>, name: &'static str) -> std::result::Result<usize, DecodeError> {
    let n = dec.u64(name)?;
    if n > 1 << 16 {
        return Err(DecodeError::Invalid(name));
    }
    Ok(n as usize)
}

/// `S_i = G^{p(i)}` with a proof that it matches `Y_i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecryptedShare {
    pub index: usize,
    #[serde(with = "serde_big")]
    pub share: BigUint,
    pub proof: DleqProof,
}

impl DecryptedShare {
    pub fn encode_into(&self, enc: &mut Encoder) {
        enc.tag(SHARE_TAG).u64(self.index as u64).int(&self.share);
        self.proof.encode_into(enc);
    }

    pub fn decode_from(dec: &mut Decoder<'_>) -> std::result::Result<Self, DecodeError> {
        dec.expect_tag(SHARE_TAG)?;
        let index = dec.u64("share.index")?;
        let index = usize::try_from(index).map_err(|_| DecodeError::Invalid("share.index"))?;
        Ok(Self {
            index,
            share: dec.int("share.value")?,
            proof: DleqProof::decode_from(dec)?,
        })
    }
}

/// `h(G^r)`: SHA-256 of the canonical encoding of the element, mod `m`.
pub fn mask(element: &BigUint, m: &BigUint) -> BigUint {
    let mut enc = Encoder::new();
    enc.int(element);
    hash_to_int(enc.as_bytes(), m)
}

fn check_setup(params: &GroupParams, n: usize, t: usize, pubkeys: &[BigUint]) -> Result<()> {
    if t == 0 || t > n {
        return Err(PvssError::InvalidThreshold { t, n });
    }
    if BigUint::from(n) >= params.q {
        return Err(PvssError::TooManyParticipants {
            n,
            q: params.q.clone(),
        });
    }
    for (k, y) in pubkeys.iter().enumerate() {
        if !params.contains(y) || y.is_one() {
            return Err(PvssError::InvalidKey(k + 1));
        }
    }
    Ok(())
}

fn eval_poly(coeffs: &[BigUint], x: &BigUint, q: &BigUint) -> BigUint {
    coeffs
        .iter()
        .rev()
        .fold(BigUint::zero(), |acc, c| (acc * x + c) % q)
}

/// `X_i = ∏_j C_j^{i^j mod q}`.
pub fn share_commitment(params: &GroupParams, commitments: &[BigUint], index: usize) -> BigUint {
    let i = BigUint::from(index);
    let mut power = BigUint::one();
    let mut acc = BigUint::one();
    for c in commitments {
        acc = params.mul(&acc, &params.pow(c, &power));
        power = power * &i % &params.q;
    }
    acc
}

/// Deals `s` to the holders of `pubkeys` with threshold `t`.
#[allow(clippy::too_many_arguments)]
pub fn deal<R: RngCore + ?Sized>(
    params: &GroupParams,
    session_id: u64,
    dealer: u64,
    secret: &BigUint,
    modulus: &BigUint,
    t: usize,
    pubkeys: &[BigUint],
    rng: &mut R,
) -> Result<DealerBundle> {
    check_setup(params, pubkeys.len(), t, pubkeys)?;
    let r = params.random_scalar(rng);
    let coeffs: Vec<BigUint> = std::iter::once(r)
        .chain((1..t).map(|_| params.random_exponent(rng)))
        .collect();
    deal_with_polynomial(params, session_id, dealer, secret, modulus, &coeffs, pubkeys, rng)
}

/// [`deal`] with an explicit polynomial `coeffs[0] + coeffs[1] x + …`. The
/// rng only feeds the proofs.
#[allow(clippy::too_many_arguments)]
pub fn deal_with_polynomial<R: RngCore + ?Sized>(
    params: &GroupParams,
    session_id: u64,
    dealer: u64,
    secret: &BigUint,
    modulus: &BigUint,
    coeffs: &[BigUint],
    pubkeys: &[BigUint],
    rng: &mut R,
) -> Result<DealerBundle> {
    let n = pubkeys.len();
    let t = coeffs.len();
    check_setup(params, n, t, pubkeys)?;
    if modulus.is_zero() {
        return Err(PvssError::ZeroModulus);
    }
    if secret >= modulus {
        return Err(PvssError::SecretOutOfRange);
    }
    let q = &params.q;
    let coeffs: Vec<BigUint> = coeffs.iter().map(|c| c % q).collect();
    let commitments: Vec<BigUint> = coeffs.iter().map(|a| params.pow(&params.g, a)).collect();
    let mut encrypted_shares = Vec::with_capacity(n);
    let mut proofs = Vec::with_capacity(n);
    for (k, y) in pubkeys.iter().enumerate() {
        let pi = eval_poly(&coeffs, &BigUint::from(k + 1), q);
        let x_i = params.pow(&params.g, &pi);
        let y_i = params.pow(y, &pi);
        let stmt = DleqStatement::new(params.g.clone(), x_i, y.clone(), y_i.clone());
        proofs.push(dleq_prove(params, &stmt, &pi, rng)?);
        encrypted_shares.push(y_i);
    }
    let pooled = params.pow(&params.big_g, &coeffs[0]);
    let masked_secret = (secret + mask(&pooled, modulus)) % modulus;
    Ok(DealerBundle {
        session_id,
        dealer,
        modulus: modulus.clone(),
        masked_secret,
        commitments,
        encrypted_shares,
        proofs,
    })
}

/// Public check of a bundle against the recipients' keys.
pub fn verify_deal(params: &GroupParams, bundle: &DealerBundle, pubkeys: &[BigUint]) -> bool {
    let n = pubkeys.len();
    if bundle.encrypted_shares.len() != n
        || bundle.proofs.len() != n
        || check_setup(params, n, bundle.threshold(), pubkeys).is_err()
        || bundle.modulus.is_zero()
        || bundle.masked_secret >= bundle.modulus
    {
        return false;
    }
    if !bundle.commitments.iter().all(|c| params.contains(c)) {
        return false;
    }
    pubkeys.iter().enumerate().all(|(k, y)| {
        let stmt = DleqStatement::new(
            params.g.clone(),
            share_commitment(params, &bundle.commitments, k + 1),
            y.clone(),
            bundle.encrypted_shares[k].clone(),
        );
        dleq_verify(params, &stmt, &bundle.proofs[k])
    })
}

fn share_statement(params: &GroupParams, public: &BigUint, share: &BigUint, encrypted: &BigUint) -> DleqStatement {
    DleqStatement::new(params.big_g.clone(), public.clone(), share.clone(), encrypted.clone())
}

/// Participant `index` (1-based) decrypts its share.
pub fn decrypt_share<R: RngCore + ?Sized>(
    params: &GroupParams,
    bundle: &DealerBundle,
    index: usize,
    key: &KeyPair,
    rng: &mut R,
) -> Result<DecryptedShare> {
    let n = bundle.participants();
    if index == 0 || index > n {
        return Err(PvssError::IndexOutOfRange { index, n });
    }
    let encrypted = &bundle.encrypted_shares[index - 1];
    // The dealer's proof for this slot names the recipient's public key.
    let slot = DleqStatement::new(
        params.g.clone(),
        share_commitment(params, &bundle.commitments, index),
        key.public.clone(),
        encrypted.clone(),
    );
    if params.pow(&params.big_g, &key.secret) != key.public
        || bundle.proofs.len() != n
        || !dleq_verify(params, &slot, &bundle.proofs[index - 1])
    {
        return Err(PvssError::WrongKey(index));
    }
    let inv = mod_inverse(&key.secret, &params.q).ok_or(CryptoError::InvalidSecret)?;
    let share = params.pow(encrypted, &inv);
    let stmt = share_statement(params, &key.public, &share, encrypted);
    let proof = dleq_prove(params, &stmt, &key.secret, rng).map_err(|e| match e {
        CryptoError::BadWitness => PvssError::WrongKey(index),
        other => other.into(),
    })?;
    Ok(DecryptedShare {
        index,
        share,
        proof,
    })
}

pub fn verify_share(
    params: &GroupParams,
    bundle: &DealerBundle,
    public: &BigUint,
    share: &DecryptedShare,
) -> bool {
    let Some(encrypted) = share
        .index
        .checked_sub(1)
        .and_then(|k| bundle.encrypted_shares.get(k))
    else {
        return false;
    };
    dleq_verify(
        params,
        &share_statement(params, public, &share.share, encrypted),
        &share.proof,
    )
}

/// Lagrange coefficients at zero for the given distinct nonzero indices,
/// mod `q`.
pub fn lagrange_at_zero(indices: &[usize], q: &BigUint) -> Vec<BigUint> {
    let q_int = BigInt::from(q.clone());
    indices
        .iter()
        .map(|&i| {
            let mut num = BigInt::one();
            let mut den = BigInt::one();
            for &k in indices {
                if k != i {
                    num *= BigInt::from(k);
                    den *= BigInt::from(k) - BigInt::from(i);
                }
            }
            let num = num.mod_floor(&q_int).to_biguint().expect("non-negative");
            let den = den.mod_floor(&q_int).to_biguint().expect("non-negative");
            let inv = mod_inverse(&den, q).expect("distinct indices below q");
            num * inv % q
        })
        .collect()
}

/// Pools verified shares into `G^r`. Uses the first `t` shares by position
/// after checking all of them.
pub fn pool_shares(
    params: &GroupParams,
    bundle: &DealerBundle,
    pubkeys: &[BigUint],
    shares: &[DecryptedShare],
) -> Result<BigUint> {
    let t = bundle.threshold();
    let n = bundle.participants();
    let mut seen = BTreeSet::new();
    for share in shares {
        if share.index == 0 || share.index > n || share.index > pubkeys.len() {
            return Err(PvssError::IndexOutOfRange {
                index: share.index,
                n,
            });
        }
        if !seen.insert(share.index) {
            return Err(PvssError::DuplicateIndex(share.index));
        }
        if !verify_share(params, bundle, &pubkeys[share.index - 1], share) {
            return Err(PvssError::InvalidShare(share.index));
        }
    }
    if shares.len() < t {
        return Err(PvssError::InsufficientShares {
            have: shares.len(),
            need: t,
        });
    }
    let used = &shares[..t];
    let indices: Vec<usize> = used.iter().map(|s| s.index).collect();
    let lambdas = lagrange_at_zero(&indices, &params.q);
    Ok(used
        .iter()
        .zip(&lambdas)
        .fold(BigUint::one(), |acc, (s, l)| params.mul(&acc, &params.pow(&s.share, l))))
}

/// Recovers the dealt secret from at least `t` verified shares.
pub fn reconstruct(
    params: &GroupParams,
    bundle: &DealerBundle,
    pubkeys: &[BigUint],
    shares: &[DecryptedShare],
) -> Result<BigUint> {
    let pooled = pool_shares(params, bundle, pubkeys, shares)?;
    let m = &bundle.modulus;
    Ok((&bundle.masked_secret + m - mask(&pooled, m)) % m)
}
