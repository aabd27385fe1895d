//! The Random Integer Generation game.
//!
//! `n` players (even) each pick a strategy in `{0, …, m-1}`. Player `2k-1`
//! plays a zero-sum matrix game against player `2k`; the game's output is the
//! sum of all strategies mod `m`.
//!
//! Player indices in this module are **1-based**, matching the pairing rule
//! `pair(2k-1) = 2k`. Strategy values are 0-based.
//!
//! Two payoff families are provided:
//!
//! * [`rig_matrix`] / [`payoff_f`]: the base game `A^(m)`, with `+1` on the
//!   diagonal and `-1` just above it (wrapping to the bottom-left corner);
//! * [`build_matrix`] / [`dense_g`]: the dense family `B^(m,f)` with
//!   `entry(i, j) = g(j - i)`, `2f` nonzero entries per row.
//!
//! Note that `B^(m,1)` is the *transpose* of `A^(m)` (they coincide only for
//! `m = 2`); both are circulant with zero row and column sums, and each has
//! uniform play as its unique equilibrium. [`PayoffRule`] picks `A^(m)` for
//! `f = 1` and `B^(m,f)` otherwise.
//!
//! All equilibrium arithmetic is exact (`BigRational`). Uniqueness is checked
//! for concrete `m` only; the statement for every `m` is a theorem, not
//! something this module proves.

mod equilibrium;
pub(crate) mod linalg;

pub use equilibrium::{
    alliance_total_utility, kernel_uniqueness_check, parallel_counterexample,
    support_enumeration_ne, verify_uniform_is_ne, Equilibrium, KernelReport, NeReport,
    ParallelReport, MAX_ORACLE_M, MAX_PARALLEL_BITS,
};

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest `m` for which a dense matrix is materialised.
pub const MAX_DENSE_M: usize = 1 << 12;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GameError {
    #[error("player count must be even and at least 2, got {0}")]
    InvalidPlayerCount(usize),
    #[error("player index {index} out of range 1..={n}")]
    PlayerOutOfRange { index: usize, n: usize },
    #[error("strategy {value} out of range for m = {m}")]
    StrategyOutOfRange { value: u64, m: u64 },
    #[error("m must be at least 2, got {0}")]
    TooFewStrategies(u64),
    #[error("density f = {f} must satisfy 1 <= f <= m/2 for m = {m}")]
    InvalidDensity { m: u64, f: u64 },
    #[error("gcd(f,m) must be 1 (m = {m}, f = {f})")]
    GcdNotOne { m: u64, f: u64 },
    #[error("m = {m} exceeds the dense-matrix limit {max}")]
    MatrixTooLarge { m: u64, max: usize },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("not a probability distribution: {0}")]
    InvalidDistribution(&'static str),
    #[error("alliance must be non-empty")]
    EmptyAlliance,
    #[error("support enumeration is limited to m <= {max}, got {m}")]
    TooLargeForOracle { m: usize, max: usize },
    #[error("parallel counterexample needs 1 <= k <= {max}, got {k}")]
    InvalidBitCount { k: u32, max: u32 },
}

pub type Result<T> = std::result::Result<T, GameError>;

fn check_density(m: u64, f: u64) -> Result<()> {
    if m < 2 {
        return Err(GameError::TooFewStrategies(m));
    }
    if f == 0 || f > m / 2 {
        return Err(GameError::InvalidDensity { m, f });
    }
    if f.gcd(&m) != 1 {
        return Err(GameError::GcdNotOne { m, f });
    }
    Ok(())
}

/// `(n, m, f)`: player count, strategy count and density parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameParams {
    n: usize,
    m: u64,
    f: u64,
}

impl GameParams {
    pub fn new(n: usize, m: u64, f: u64) -> Result<Self> {
        if n < 2 || n % 2 != 0 {
            return Err(GameError::InvalidPlayerCount(n));
        }
        check_density(m, f)?;
        Ok(Self { n, m, f })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn f(&self) -> u64 {
        self.f
    }

    pub fn rule(&self) -> PayoffRule {
        PayoffRule { m: self.m, f: self.f }
    }
}

/// Entrywise payoff of the odd player of a pair, without materialising a
/// matrix. Works for any `m` that fits in a `u64`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PayoffRule {
    m: u64,
    f: u64,
}

impl PayoffRule {
    pub fn new(m: u64, f: u64) -> Result<Self> {
        check_density(m, f)?;
        Ok(Self { m, f })
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn f(&self) -> u64 {
        self.f
    }

    /// Payoff of the odd player when playing `a` against `b`.
    pub fn entry(&self, a: u64, b: u64) -> Result<i8> {
        if self.f == 1 {
            payoff_f(a, b, self.m)
        } else {
            check_strategy(a, self.m)?;
            check_strategy(b, self.m)?;
            let l = (b + self.m - a) % self.m;
            Ok(g_unchecked(l, self.m, self.f))
        }
    }

    pub fn matrix(&self) -> Result<PayoffMatrix> {
        if self.f == 1 {
            rig_matrix(self.m)
        } else {
            PayoffMatrix::dense(self.m, self.f)
        }
    }
}

fn check_strategy(value: u64, m: u64) -> Result<()> {
    if value >= m {
        Err(GameError::StrategyOutOfRange { value, m })
    } else {
        Ok(())
    }
}

/// Partner of 1-based player `i` among `n` players.
pub fn pair_of(i: usize, n: usize) -> Result<usize> {
    if n < 2 || n % 2 != 0 {
        return Err(GameError::InvalidPlayerCount(n));
    }
    if i == 0 || i > n {
        return Err(GameError::PlayerOutOfRange { index: i, n });
    }
    Ok(if i % 2 == 1 { i + 1 } else { i - 1 })
}

/// Base-game payoff: `1` if `a ≡ b`, `-1` if `a - b ≡ -1 (mod m)`, else `0`.
pub fn payoff_f(a: u64, b: u64, m: u64) -> Result<i8> {
    if m < 2 {
        return Err(GameError::TooFewStrategies(m));
    }
    check_strategy(a, m)?;
    check_strategy(b, m)?;
    let diff = (a + m - b) % m;
    Ok(if diff == 0 {
        1
    } else if diff == m - 1 {
        -1
    } else {
        0
    })
}

fn g_unchecked(l: u64, m: u64, f: u64) -> i8 {
    if l < f {
        1
    } else if l >= m - f {
        -1
    } else {
        0
    }
}

/// Dense-family kernel `g(l)`, with `l` reduced mod `m`.
pub fn dense_g(l: i64, m: u64, f: u64) -> Result<i8> {
    check_density(m, f)?;
    let l = (i128::from(l)).rem_euclid(i128::from(m)) as u64;
    Ok(g_unchecked(l, m, f))
}

/// A square payoff matrix for the odd player of a pair.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PayoffMatrix {
    m: usize,
    entries: Vec<i8>,
}

impl PayoffMatrix {
    fn from_fn(m: usize, entry: impl Fn(usize, usize) -> i8) -> Self {
        let mut entries = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                entries.push(entry(i, j));
            }
        }
        Self { m, entries }
    }

    fn check_size(m: u64) -> Result<usize> {
        if m < 2 {
            return Err(GameError::TooFewStrategies(m));
        }
        if m > MAX_DENSE_M as u64 {
            return Err(GameError::MatrixTooLarge { m, max: MAX_DENSE_M });
        }
        Ok(m as usize)
    }

    /// `B^(m,f)`: `entry(i, j) = g(j - i)`.
    pub fn dense(m: u64, f: u64) -> Result<Self> {
        check_density(m, f)?;
        let size = Self::check_size(m)?;
        Ok(Self::dense_unchecked(size, f))
    }

    /// `B^(m,f)` without the `1 <= f <= m/2`, `gcd(f, m) = 1` checks. Only for
    /// negative controls that show why those constraints exist.
    #[doc(hidden)]
    pub fn dense_unchecked(m: usize, f: u64) -> Self {
        let mu = m as u64;
        Self::from_fn(m, |i, j| g_unchecked((j as u64 + mu - i as u64) % mu, mu, f))
    }

    /// Builds a matrix from explicit rows. Used for perturbed negative
    /// controls; none of the family invariants are enforced.
    pub fn from_rows(rows: &[Vec<i8>]) -> Result<Self> {
        let m = rows.len();
        for row in rows {
            if row.len() != m {
                return Err(GameError::DimensionMismatch {
                    expected: m,
                    actual: row.len(),
                });
            }
        }
        Ok(Self {
            m,
            entries: rows.concat(),
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn entry(&self, i: usize, j: usize) -> i8 {
        self.entries[i * self.m + j]
    }

    pub fn row(&self, i: usize) -> &[i8] {
        &self.entries[i * self.m..(i + 1) * self.m]
    }

    pub fn rows(&self) -> Vec<Vec<i8>> {
        (0..self.m).map(|i| self.row(i).to_vec()).collect()
    }

    /// Copy with one entry replaced.
    pub fn with_entry(&self, i: usize, j: usize, value: i8) -> Self {
        let mut out = self.clone();
        out.entries[i * self.m + j] = value;
        out
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.m, |i, j| self.entry(j, i))
    }

    pub fn is_circulant(&self) -> bool {
        let m = self.m;
        (0..m).all(|i| (0..m).all(|j| self.entry((i + 1) % m, (j + 1) % m) == self.entry(i, j)))
    }

    pub fn row_sums(&self) -> Vec<i64> {
        (0..self.m)
            .map(|i| self.row(i).iter().map(|&x| i64::from(x)).sum())
            .collect()
    }

    pub fn column_sums(&self) -> Vec<i64> {
        (0..self.m)
            .map(|j| (0..self.m).map(|i| i64::from(self.entry(i, j))).sum())
            .collect()
    }

    pub(crate) fn to_rational(&self) -> linalg::Matrix {
        (0..self.m)
            .map(|i| self.row(i).iter().map(|&x| rational(i64::from(x))).collect())
            .collect()
    }

    /// `M · v`.
    pub fn apply(&self, v: &[BigRational]) -> Result<Vec<BigRational>> {
        self.check_dim(v.len())?;
        Ok((0..self.m)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .filter(|(&a, _)| a != 0)
                    .map(|(&a, x)| x * rational(i64::from(a)))
                    .sum()
            })
            .collect())
    }

    /// `vᵀ · M`.
    pub fn apply_left(&self, v: &[BigRational]) -> Result<Vec<BigRational>> {
        self.transpose().apply(v)
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.m {
            Err(GameError::DimensionMismatch {
                expected: self.m,
                actual: len,
            })
        } else {
            Ok(())
        }
    }
}

impl fmt::Debug for PayoffMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PayoffMatrix({})\n{self}", self.m)
    }
}

impl fmt::Display for PayoffMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.m {
            let row: Vec<String> = self.row(i).iter().map(|x| format!("{x:>2}")).collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

/// `B^(m,f)` from validated parameters.
pub fn build_matrix(params: &GameParams) -> Result<PayoffMatrix> {
    PayoffMatrix::dense(params.m, params.f)
}

/// `A^(m)`: `entry(i, j) = payoff_f(i, j, m)`.
pub fn rig_matrix(m: u64) -> Result<PayoffMatrix> {
    let size = PayoffMatrix::check_size(m)?;
    Ok(PayoffMatrix::from_fn(size, |i, j| {
        payoff_f(i as u64, j as u64, m).expect("in range")
    }))
}

/// A pure strategy per player.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    values: Vec<u64>,
    m: u64,
}

impl Outcome {
    pub fn new(values: Vec<u64>, m: u64) -> Result<Self> {
        if m < 2 {
            return Err(GameError::TooFewStrategies(m));
        }
        if let Some(&value) = values.iter().find(|&&v| v >= m) {
            return Err(GameError::StrategyOutOfRange { value, m });
        }
        Ok(Self { values, m })
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Per-player utilities of an outcome.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PayoffVector(pub Vec<i64>);

impl PayoffVector {
    pub fn total(&self) -> i64 {
        self.0.iter().sum()
    }
}

/// Pays each pair `(2k-1, 2k)` according to `matrix`.
pub fn outcome_payoffs(outcome: &Outcome, matrix: &PayoffMatrix) -> Result<PayoffVector> {
    let n = outcome.len();
    if n < 2 || n % 2 != 0 {
        return Err(GameError::InvalidPlayerCount(n));
    }
    if outcome.m() != matrix.m() as u64 {
        return Err(GameError::DimensionMismatch {
            expected: matrix.m(),
            actual: outcome.m() as usize,
        });
    }
    let mut utilities = Vec::with_capacity(n);
    for pair in outcome.values().chunks_exact(2) {
        let u = i64::from(matrix.entry(pair[0] as usize, pair[1] as usize));
        utilities.push(u);
        utilities.push(-u);
    }
    Ok(PayoffVector(utilities))
}

/// Same as [`outcome_payoffs`] but entrywise through a [`PayoffRule`], so it
/// works for any `m`.
pub fn outcome_payoffs_with(outcome: &Outcome, rule: &PayoffRule) -> Result<PayoffVector> {
    let n = outcome.len();
    if n < 2 || n % 2 != 0 {
        return Err(GameError::InvalidPlayerCount(n));
    }
    if outcome.m() != rule.m() {
        return Err(GameError::DimensionMismatch {
            expected: rule.m() as usize,
            actual: outcome.m() as usize,
        });
    }
    let mut utilities = Vec::with_capacity(n);
    for pair in outcome.values().chunks_exact(2) {
        let u = i64::from(rule.entry(pair[0], pair[1])?);
        utilities.push(u);
        utilities.push(-u);
    }
    Ok(PayoffVector(utilities))
}

/// `Σ s_i mod m`.
pub fn game_output(outcome: &Outcome) -> u64 {
    let m = u128::from(outcome.m());
    (outcome.values().iter().fold(0u128, |acc, &v| (acc + u128::from(v)) % m)) as u64
}

pub(crate) fn rational(x: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

/// A probability vector over `m` strategies with exact rational entries.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MixedStrategy {
    probs: Vec<BigRational>,
}

impl MixedStrategy {
    pub fn new(probs: Vec<BigRational>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(GameError::TooFewStrategies(probs.len() as u64));
        }
        if probs.iter().any(|p| p < &BigRational::zero() || p > &BigRational::one()) {
            return Err(GameError::InvalidDistribution("probability outside [0, 1]"));
        }
        if probs.iter().sum::<BigRational>() != BigRational::one() {
            return Err(GameError::InvalidDistribution("probabilities do not sum to 1"));
        }
        Ok(Self { probs })
    }

    pub fn pure(m: usize, k: usize) -> Result<Self> {
        if k >= m {
            return Err(GameError::StrategyOutOfRange {
                value: k as u64,
                m: m as u64,
            });
        }
        let mut probs = vec![BigRational::zero(); m];
        probs[k] = BigRational::one();
        Self::new(probs)
    }

    /// Builds from integer weights, normalised by their sum.
    pub fn from_weights(weights: &[u64]) -> Result<Self> {
        let total: u64 = weights.iter().sum();
        if total == 0 {
            return Err(GameError::InvalidDistribution("weights sum to zero"));
        }
        let total = BigInt::from(total);
        Self::new(
            weights
                .iter()
                .map(|&w| BigRational::new(BigInt::from(w), total.clone()))
                .collect(),
        )
    }

    pub fn probs(&self) -> &[BigRational] {
        &self.probs
    }

    pub fn m(&self) -> usize {
        self.probs.len()
    }

    pub fn is_uniform(&self) -> bool {
        let u = BigRational::new(BigInt::one(), BigInt::from(self.m()));
        self.probs.iter().all(|p| p == &u)
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.m()).filter(|&i| !self.probs[i].is_zero()).collect()
    }
}

impl fmt::Display for MixedStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.probs.iter().map(ToString::to_string).collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// `(1/m, …, 1/m)`.
pub fn uniform_profile(m: usize) -> Result<MixedStrategy> {
    if m < 2 {
        return Err(GameError::TooFewStrategies(m as u64));
    }
    MixedStrategy::new(vec![BigRational::new(BigInt::one(), BigInt::from(m)); m])
}

/// `rowᵀ · M · col`, exactly.
pub fn expected_utility(
    row: &MixedStrategy,
    col: &MixedStrategy,
    matrix: &PayoffMatrix,
) -> Result<BigRational> {
    matrix.check_dim(row.m())?;
    let mc = matrix.apply(col.probs())?;
    Ok(row.probs().iter().zip(&mc).map(|(a, b)| a * b).sum())
}
