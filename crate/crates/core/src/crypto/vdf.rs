//! Sloth-style verifiable delay function over `Z_p`, `p ≡ 3 (mod 4)`.
//!
//! One round maps `y ↦ π(ρ(y))` where `ρ` is the parity-normalised modular
//! square root (one exponentiation by `(p+1)/4`) and `π` is the involution
//! that flips the low bit. Both are bijections of `[0, p)`, so the round can
//! be undone with a single squaring. Evaluation starts from `π(x)` and runs
//! `t` rounds; the proof is every `checkpoint_interval`-th state plus the
//! final one, and verification walks each segment backwards by squaring.

use num_bigint::BigUint;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::{prime, CryptoError};
use crate::serde_big;

pub const MIN_SECURITY_BITS: u64 = 64;
pub const DEFAULT_CHECKPOINT_INTERVAL: u64 = 1000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VdfParams {
    #[serde(with = "serde_big")]
    modulus: BigUint,
    difficulty: u64,
    security_bits: u64,
    checkpoint_interval: u64,
}

impl VdfParams {
    /// Parameters over an explicit modulus. Unlike [`vdf_setup`] this takes
    /// any size of prime (small fixtures included) and allows `difficulty`
    /// zero.
    pub fn new(
        modulus: BigUint,
        difficulty: u64,
        checkpoint_interval: u64,
    ) -> Result<Self, CryptoError> {
        if checkpoint_interval == 0 {
            return Err(CryptoError::ZeroCheckpointInterval);
        }
        if &modulus % 4u32 != BigUint::from(3u32) || !prime::is_prime(&modulus) {
            return Err(CryptoError::InvalidGroup("VDF modulus must be a prime ≡ 3 mod 4"));
        }
        Ok(Self {
            security_bits: modulus.bits(),
            modulus,
            difficulty,
            checkpoint_interval,
        })
    }

    pub fn modulus(&self) -> &BigUint {
        &self.modulus
    }

    pub fn difficulty(&self) -> u64 {
        self.difficulty
    }

    pub fn security_bits(&self) -> u64 {
        self.security_bits
    }

    pub fn checkpoint_interval(&self) -> u64 {
        self.checkpoint_interval
    }

    pub fn checkpoint_count(&self) -> usize {
        self.difficulty.div_ceil(self.checkpoint_interval) as usize
    }

    pub fn with_checkpoint_interval(self, interval: u64) -> Result<Self, CryptoError> {
        Self::new(self.modulus, self.difficulty, interval)
    }

    pub fn with_difficulty(self, difficulty: u64) -> Self {
        Self { difficulty, ..self }
    }

    fn exponent(&self) -> BigUint {
        (&self.modulus + 1u32) >> 2
    }

    fn permute(&self, z: &BigUint) -> BigUint {
        let flipped = if z.bit(0) { z - 1u32 } else { z + 1u32 };
        if flipped < self.modulus {
            flipped
        } else {
            z.clone()
        }
    }

    fn sqrt(&self, z: &BigUint, exponent: &BigUint) -> BigUint {
        let p = &self.modulus;
        let r = z.modpow(exponent, p);
        if r.is_zero() {
            return r;
        }
        let is_residue = &(&r * &r % p) == z;
        // Residues take the even root; non-residues the odd root of -z.
        if r.bit(0) != is_residue {
            r
        } else {
            p - r
        }
    }

    fn unsqrt(&self, w: &BigUint) -> BigUint {
        let p = &self.modulus;
        let sq = w * w % p;
        if !w.bit(0) || sq.is_zero() {
            sq
        } else {
            p - sq
        }
    }

    fn step(&self, y: &BigUint, exponent: &BigUint) -> BigUint {
        self.permute(&self.sqrt(y, exponent))
    }

    fn unstep(&self, y: &BigUint) -> BigUint {
        self.unsqrt(&self.permute(y))
    }
}

/// Output `y` plus the checkpoint proof.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VdfOutput {
    #[serde(with = "serde_big")]
    pub y: BigUint,
    #[serde(with = "serde_big::vec")]
    pub proof: Vec<BigUint>,
}

/// Generates a `security_bits`-bit prime `p ≡ 3 (mod 4)` from `seed`.
pub fn vdf_setup(security_bits: u64, difficulty: u64, seed: &[u8]) -> Result<VdfParams, CryptoError> {
    if security_bits < MIN_SECURITY_BITS {
        return Err(CryptoError::SecurityTooSmall {
            bits: security_bits,
            min: MIN_SECURITY_BITS,
        });
    }
    if difficulty == 0 {
        return Err(CryptoError::ZeroDifficulty);
    }
    let p = prime::blum_prime(security_bits, seed);
    VdfParams::new(p, difficulty, DEFAULT_CHECKPOINT_INTERVAL.min(difficulty))
}

/// Runs the slow direction: `t` square-root rounds from `π(x mod p)`.
pub fn vdf_eval(params: &VdfParams, x: &BigUint) -> VdfOutput {
    let exponent = params.exponent();
    let mut y = params.permute(&(x % params.modulus()));
    let mut proof = Vec::with_capacity(params.checkpoint_count());
    for k in 1..=params.difficulty {
        y = params.step(&y, &exponent);
        if k % params.checkpoint_interval == 0 || k == params.difficulty {
            proof.push(y.clone());
        }
    }
    VdfOutput { y, proof }
}

/// Runs the fast direction: the unique `x < p` with `vdf_eval(x).y == y`.
pub fn vdf_invert(params: &VdfParams, y: &BigUint) -> BigUint {
    let mut z = y % params.modulus();
    for _ in 0..params.difficulty {
        z = params.unstep(&z);
    }
    params.permute(&z)
}

/// Checks every checkpoint segment by walking it backwards with squarings.
pub fn vdf_verify(params: &VdfParams, x: &BigUint, out: &VdfOutput) -> Result<bool, CryptoError> {
    let expected = params.checkpoint_count();
    if out.proof.len() != expected {
        return Err(CryptoError::ProofLength {
            expected,
            actual: out.proof.len(),
        });
    }
    let p = params.modulus();
    if x >= p || &out.y >= p || out.proof.iter().any(|c| c >= p) {
        return Ok(false);
    }
    let start = params.permute(x);
    let Some(last) = out.proof.last() else {
        return Ok(out.y == start);
    };
    if last != &out.y {
        return Ok(false);
    }
    let mut previous = start;
    let mut done = 0u64;
    for checkpoint in &out.proof {
        let len = params.checkpoint_interval.min(params.difficulty - done);
        let mut z = checkpoint.clone();
        for _ in 0..len {
            z = params.unstep(&z);
        }
        if z != previous {
            return Ok(false);
        }
        previous = checkpoint.clone();
        done += len;
    }
    Ok(done == params.difficulty)
}

impl VdfParams {
    /// The fixture used throughout the tests: `p = 23`.
    pub fn fixture_23(difficulty: u64) -> Self {
        Self::new(BigUint::from(23u32), difficulty, 1).expect("23 is a Blum prime")
    }
}
