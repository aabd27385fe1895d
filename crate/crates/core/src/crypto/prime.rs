//! Primality testing and deterministic prime generation.

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::sha256;

const SMALL_PRIMES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn sieve_primes(limit: u32) -> Vec<u32> {
    let mut is = vec![true; limit as usize + 1];
    is[0] = false;
    is[1] = false;
    let mut i = 2usize;
    while i * i <= limit as usize {
        if is[i] {
            for j in (i * i..=limit as usize).step_by(i) {
                is[j] = false;
            }
        }
        i += 1;
    }
    (2..=limit).filter(|&k| is[k as usize]).collect()
}

fn miller_rabin_round(n: &BigUint, n_minus_1: &BigUint, d: &BigUint, s: u64, a: &BigUint) -> bool {
    let mut x = a.modpow(d, n);
    if x.is_one() || &x == n_minus_1 {
        return true;
    }
    for _ in 1..s {
        x = &x * &x % n;
        if &x == n_minus_1 {
            return true;
        }
        if x.is_one() {
            return false;
        }
    }
    false
}

/// Miller-Rabin with the first twelve prime bases (exact below 3.3e24) plus
/// `extra_rounds` bases derived by hashing `n`.
pub fn is_probable_prime(n: &BigUint, extra_rounds: usize) -> bool {
    if n < &BigUint::from(2u32) {
        return false;
    }
    for &p in &SMALL_PRIMES {
        let p = BigUint::from(p);
        if n == &p {
            return true;
        }
        if (n % &p).is_zero() {
            return false;
        }
    }
    let n_minus_1 = n - 1u32;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;
    for &a in &SMALL_PRIMES {
        if !miller_rabin_round(n, &n_minus_1, &d, s, &BigUint::from(a)) {
            return false;
        }
    }
    if n.bits() <= 64 || extra_rounds == 0 {
        return true;
    }
    let mut rng = ChaCha20Rng::from_seed(sha256(&n.to_bytes_be()));
    let two = BigUint::from(2u32);
    (0..extra_rounds).all(|_| {
        let a = rng.gen_biguint_range(&two, &n_minus_1);
        miller_rabin_round(n, &n_minus_1, &d, s, &a)
    })
}

/// `is_probable_prime` with a default error bound of 2^-64 for random inputs.
pub fn is_prime(n: &BigUint) -> bool {
    is_probable_prime(n, 20)
}

fn seeded_rng(tag: &str, bits: u64, seed: &[u8]) -> ChaCha20Rng {
    let mut material = Vec::new();
    material.extend_from_slice(tag.as_bytes());
    material.extend_from_slice(&bits.to_be_bytes());
    material.extend_from_slice(seed);
    ChaCha20Rng::from_seed(sha256(&material))
}

fn random_with_top_bit(rng: &mut ChaCha20Rng, bits: u64) -> BigUint {
    let mut x = rng.gen_biguint(bits);
    x.set_bit(bits - 1, true);
    x
}

/// Sieve state for incremental search `base + delta`.
struct Residues {
    primes: Vec<u32>,
    base: Vec<u32>,
}

impl Residues {
    fn new(base: &BigUint) -> Self {
        let primes: Vec<u32> = sieve_primes(4096).into_iter().skip(1).collect();
        let base = primes
            .iter()
            .map(|&p| (base % p).to_u32().unwrap())
            .collect();
        Self { primes, base }
    }

    fn residue(&self, i: usize, delta: u64) -> u64 {
        let p = u64::from(self.primes[i]);
        (u64::from(self.base[i]) + delta % p) % p
    }
}

/// Deterministic prime `p ≡ 3 (mod 4)` with exactly `bits` bits, derived
/// from `seed`.
pub fn blum_prime(bits: u64, seed: &[u8]) -> BigUint {
    assert!(bits >= 3, "need at least 3 bits");
    let mut rng = seeded_rng("rig/blum-prime", bits, seed);
    loop {
        let mut start = random_with_top_bit(&mut rng, bits);
        start.set_bit(0, true);
        start.set_bit(1, true);
        let sieve = Residues::new(&start);
        let use_sieve = bits > 24;
        for step in 0..(1u64 << 20) {
            let delta = 4 * step;
            if use_sieve && (0..sieve.primes.len()).any(|i| sieve.residue(i, delta) == 0) {
                continue;
            }
            let candidate = &start + delta;
            if candidate.bits() != bits {
                break;
            }
            if is_prime(&candidate) {
                return candidate;
            }
        }
    }
}

/// Deterministic safe prime `p = 2q + 1` with exactly `bits` bits; returns
/// `(p, q)`.
pub fn safe_prime(bits: u64, seed: &[u8]) -> (BigUint, BigUint) {
    assert!(bits >= 6, "need at least 6 bits");
    let mut rng = seeded_rng("rig/safe-prime", bits, seed);
    loop {
        let mut start = random_with_top_bit(&mut rng, bits - 1);
        start.set_bit(0, true);
        let sieve = Residues::new(&start);
        let use_sieve = bits > 26;
        for step in 0..(1u64 << 22) {
            let delta = 2 * step;
            if use_sieve {
                // reject q ≡ 0 or p = 2q+1 ≡ 0 modulo any small odd prime
                let rejected = (0..sieve.primes.len()).any(|i| {
                    let r = sieve.residue(i, delta);
                    r == 0 || r == (u64::from(sieve.primes[i]) - 1) / 2
                });
                if rejected {
                    continue;
                }
            }
            let q = &start + delta;
            if q.bits() != bits - 1 {
                break;
            }
            let p: BigUint = (&q << 1) + 1u32;
            // Cheap base-2 Fermat screen on p before the full tests.
            if !BigUint::from(2u32).modpow(&(&p - 1u32), &p).is_one() {
                continue;
            }
            if is_prime(&q) && is_prime(&p) {
                return (p, q);
            }
        }
    }
}

/// `a^{-1} mod m` for prime `m`, or `None` when `a ≡ 0`.
pub fn mod_inverse(a: &BigUint, m: &BigUint) -> Option<BigUint> {
    let a = a % m;
    if a.is_zero() {
        return None;
    }
    let g = num_bigint::BigInt::from(a.clone()).extended_gcd(&num_bigint::BigInt::from(m.clone()));
    if !g.gcd.is_one() {
        return None;
    }
    let m_signed = num_bigint::BigInt::from(m.clone());
    let x = g.x.mod_floor(&m_signed);
    x.to_biguint()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn agrees_with_trial_division_below_5000() {
        let primes = sieve_primes(5000);
        for n in 0u32..5000 {
            assert_eq!(
                is_prime(&BigUint::from(n)),
                primes.binary_search(&n).is_ok(),
                "n = {n}"
            );
        }
    }

    #[test]
    fn known_large_values() {
        // 2^127 - 1 is prime; 2^128 + 1 is not.
        let m127 = (BigUint::one() << 127) - 1u32;
        assert!(is_prime(&m127));
        assert!(!is_prime(&((BigUint::one() << 128) + 1u32)));
        // Carmichael number
        assert!(!is_prime(&BigUint::from(561u32)));
    }

    #[test]
    fn blum_prime_shape() {
        for bits in [16u64, 64, 128] {
            let p = blum_prime(bits, b"seed");
            assert_eq!(p.bits(), bits);
            assert_eq!((&p % 4u32).to_u32(), Some(3));
            assert!(is_prime(&p));
            assert_eq!(p, blum_prime(bits, b"seed"));
        }
        assert_ne!(blum_prime(64, b"a"), blum_prime(64, b"b"));
    }

    #[test]
    fn safe_prime_shape() {
        for bits in [16u64, 64, 128] {
            let (p, q) = safe_prime(bits, b"seed");
            assert_eq!(p.bits(), bits);
            assert_eq!(p, (&q << 1) + 1u32);
            assert!(is_prime(&p) && is_prime(&q));
        }
    }

    #[test]
    fn inverse_mod_prime() {
        let m = BigUint::from(11u32);
        for a in 1u32..11 {
            let inv = mod_inverse(&BigUint::from(a), &m).unwrap();
            assert_eq!((inv * a) % &m, BigUint::one());
        }
        assert!(mod_inverse(&BigUint::zero(), &m).is_none());
    }
}
