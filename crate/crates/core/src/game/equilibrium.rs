//! Equilibrium checks: the kernel argument, a support-enumeration oracle,
//! alliance utilities and the parallel-composition counterexample.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use super::linalg::{self, Solution};
use super::{
    pair_of, rational, uniform_profile, GameError, GameParams, MixedStrategy, PayoffMatrix, Result,
};

/// Largest `m` accepted by [`support_enumeration_ne`].
pub const MAX_ORACLE_M: usize = 6;
/// Largest bit count accepted by [`parallel_counterexample`].
pub const MAX_PARALLEL_BITS: u32 = 16;

/// Result of checking that uniform play is a Nash equilibrium.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeReport {
    /// Odd player's payoff from each pure strategy against a uniform partner.
    pub row_deviation_values: Vec<BigRational>,
    /// Even player's payoff from each pure strategy against a uniform partner.
    pub column_deviation_values: Vec<BigRational>,
    /// `M · u`.
    pub matrix_times_uniform: Vec<BigRational>,
    /// Payoff of the profile itself.
    pub equilibrium_value: BigRational,
}

impl NeReport {
    /// Largest gain any single player gets from a pure deviation.
    pub fn max_gain(&self) -> BigRational {
        self.row_deviation_values
            .iter()
            .map(|v| v - &self.equilibrium_value)
            .chain(
                self.column_deviation_values
                    .iter()
                    .map(|v| v + &self.equilibrium_value),
            )
            .max()
            .unwrap_or_else(BigRational::zero)
    }

    /// Every pure deviation is worth exactly zero and `M · u = 0`.
    pub fn holds(&self) -> bool {
        self.equilibrium_value.is_zero()
            && self.row_deviation_values.iter().all(Zero::is_zero)
            && self.column_deviation_values.iter().all(Zero::is_zero)
            && self.matrix_times_uniform.iter().all(Zero::is_zero)
    }

    /// Indices of pure strategies (row then column player) with a nonzero value.
    pub fn flagged(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (k, v) in self.row_deviation_values.iter().enumerate() {
            if !v.is_zero() {
                out.push((1, k));
            }
        }
        for (k, v) in self.column_deviation_values.iter().enumerate() {
            if !v.is_zero() {
                out.push((2, k));
            }
        }
        out
    }
}

pub fn verify_uniform_is_ne(matrix: &PayoffMatrix) -> NeReport {
    let m = matrix.m();
    let u = uniform_profile(m).expect("matrices have m >= 2");
    let mu = matrix.apply(u.probs()).expect("dimensions match");
    let um = matrix.apply_left(u.probs()).expect("dimensions match");
    let value: BigRational = u.probs().iter().zip(&mu).map(|(a, b)| a * b).sum();
    NeReport {
        row_deviation_values: mu.clone(),
        column_deviation_values: um.into_iter().map(|x| -x).collect(),
        matrix_times_uniform: mu,
        equilibrium_value: value,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KernelReport {
    pub rank: usize,
    /// Basis of the right null space of the matrix.
    pub kernel_basis: Vec<Vec<BigRational>>,
    /// `rank = m - 1` and the kernel is spanned by the all-ones vector.
    pub unique: bool,
}

/// Any equilibrium strategy of the partner must be in the kernel of `M` and
/// on the simplex; this checks that the only such vector is uniform.
pub fn kernel_uniqueness_check(matrix: &PayoffMatrix) -> KernelReport {
    let m = matrix.m();
    let rows = matrix.to_rational();
    let rank = linalg::rank(rows.clone(), m);
    let kernel_basis = linalg::null_space(rows, m);
    let unique = rank + 1 == m
        && kernel_basis.len() == 1
        && kernel_basis[0].iter().all(|x| x == &kernel_basis[0][0])
        && !kernel_basis[0][0].is_zero();
    KernelReport {
        rank,
        kernel_basis,
        unique,
    }
}

/// A mixed-strategy profile for one pair: odd player `row`, even player `col`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Equilibrium {
    pub row: MixedStrategy,
    pub col: MixedStrategy,
}

fn subsets(m: usize) -> impl Iterator<Item = Vec<usize>> {
    (1u32..(1 << m)).map(move |mask| (0..m).filter(|&i| mask & (1 << i) != 0).collect())
}

/// Vertices of `{(y, v) : A y <= v·1, y >= 0, Σy = 1}` where `a` is given
/// row-major. Each vertex is found from its support `J` and its set `K` of
/// tight rows, which pin it down uniquely.
fn best_response_vertices(a: &[Vec<BigRational>]) -> Vec<Vec<BigRational>> {
    let rows = a.len();
    let cols = a[0].len();
    let mut found: Vec<Vec<BigRational>> = Vec::new();
    for support in subsets(cols) {
        for tight in subsets(rows) {
            // unknowns: y_j for j in support, then v
            let unknowns = support.len() + 1;
            let mut system: linalg::Matrix = tight
                .iter()
                .map(|&i| {
                    let mut row: Vec<BigRational> =
                        support.iter().map(|&j| a[i][j].clone()).collect();
                    row.push(-BigRational::one());
                    row.push(BigRational::zero());
                    row
                })
                .collect();
            let mut sum_row = vec![BigRational::one(); support.len()];
            sum_row.push(BigRational::zero());
            sum_row.push(BigRational::one());
            system.push(sum_row);
            let Solution::Unique(sol) = linalg::solve(system, unknowns) else {
                continue;
            };
            if sol[..support.len()].iter().any(|x| !x.is_positive()) {
                continue;
            }
            let v = &sol[support.len()];
            let mut y = vec![BigRational::zero(); cols];
            for (k, &j) in support.iter().enumerate() {
                y[j] = sol[k].clone();
            }
            let feasible = a.iter().all(|row| {
                let val: BigRational = row.iter().zip(&y).map(|(p, q)| p * q).sum();
                &val <= v
            });
            if feasible && !found.contains(&y) {
                found.push(y);
            }
        }
    }
    found
}

fn best_responses(a: &[Vec<BigRational>], y: &[BigRational]) -> BTreeSet<usize> {
    let values: Vec<BigRational> = a
        .iter()
        .map(|row| row.iter().zip(y).map(|(p, q)| p * q).sum())
        .collect();
    let best = values.iter().max().expect("non-empty").clone();
    (0..values.len()).filter(|&i| values[i] == best).collect()
}

/// All extreme Nash equilibria of the zero-sum game where the odd player is
/// paid `M[i][j]` and the even player `-M[i][j]`, by exhaustive vertex
/// enumeration. Degenerate games are handled; the result is a singleton iff
/// the equilibrium is unique.
pub fn support_enumeration_ne(matrix: &PayoffMatrix) -> Result<Vec<Equilibrium>> {
    let m = matrix.m();
    if m > MAX_ORACLE_M {
        return Err(GameError::TooLargeForOracle {
            m,
            max: MAX_ORACLE_M,
        });
    }
    // Row player's payoffs against columns, and column player's payoffs
    // (-M transposed) against rows.
    let row_payoff = matrix.to_rational();
    let col_payoff: linalg::Matrix = (0..m)
        .map(|j| (0..m).map(|i| -row_payoff[i][j].clone()).collect())
        .collect();
    let col_vertices = best_response_vertices(&row_payoff);
    let row_vertices = best_response_vertices(&col_payoff);
    let mut out = Vec::new();
    for x in &row_vertices {
        let col_best = best_responses(&col_payoff, x);
        for y in &col_vertices {
            let row_best = best_responses(&row_payoff, y);
            let x_ok = (0..m).all(|i| x[i].is_zero() || row_best.contains(&i));
            let y_ok = (0..m).all(|j| y[j].is_zero() || col_best.contains(&j));
            if x_ok && y_ok {
                out.push(Equilibrium {
                    row: MixedStrategy::new(x.clone())?,
                    col: MixedStrategy::new(y.clone())?,
                });
            }
        }
    }
    Ok(out)
}

/// Sum of expected utilities of the alliance members. Members play the given
/// strategies; everyone else plays uniform. Player indices are 1-based.
pub fn alliance_total_utility(
    alliance: &BTreeMap<usize, MixedStrategy>,
    params: &GameParams,
) -> Result<BigRational> {
    if alliance.is_empty() {
        return Err(GameError::EmptyAlliance);
    }
    let m = params.m() as usize;
    let matrix = params.rule().matrix()?;
    let uniform = uniform_profile(m)?;
    let strategy_of = |i: usize| alliance.get(&i).unwrap_or(&uniform);
    let mut total = BigRational::zero();
    for (&i, sigma) in alliance {
        let j = pair_of(i, params.n())?;
        if sigma.m() != m {
            return Err(GameError::DimensionMismatch {
                expected: m,
                actual: sigma.m(),
            });
        }
        let partner = strategy_of(j);
        total += if i % 2 == 1 {
            super::expected_utility(sigma, partner, &matrix)?
        } else {
            -super::expected_utility(partner, sigma, &matrix)?
        };
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParallelReport {
    pub bits: u32,
    /// Output value → probability, as exact `num/den` strings.
    #[serde(serialize_with = "ser_distribution")]
    pub distribution: BTreeMap<u64, BigRational>,
    pub is_equilibrium: bool,
    pub is_uniform: bool,
    /// Best gain over all pure deviations of either player.
    #[serde(serialize_with = "ser_rational")]
    pub max_deviation_gain: BigRational,
}

fn ser_rational<S: serde::Serializer>(x: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_string())
}

fn ser_distribution<S: serde::Serializer>(
    d: &BTreeMap<u64, BigRational>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut map = s.serialize_map(Some(d.len()))?;
    for (k, v) in d {
        map.serialize_entry(k, &v.to_string())?;
    }
    map.end()
}

/// Two players run `k` independent copies of the `m = 2` game in parallel.
/// Both play "flip one fair coin, copy it to every bit". Returns the output
/// distribution (bitwise sum mod 2) and whether the profile is an
/// equilibrium, checked against every pure deviation exactly.
pub fn parallel_counterexample(k: u32) -> Result<ParallelReport> {
    if k == 0 || k > MAX_PARALLEL_BITS {
        return Err(GameError::InvalidBitCount {
            k,
            max: MAX_PARALLEL_BITS,
        });
    }
    let all_ones = (1u64 << k) - 1;
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let profile = [(0u64, half.clone()), (all_ones, half.clone())];

    // Odd player's payoff: +1 per agreeing bit, -1 per differing bit.
    let payoff = |a: u64, b: u64| -> i64 {
        let differ = i64::from((a ^ b).count_ones());
        i64::from(k) - 2 * differ
    };
    let expected = |a: u64, against: &[(u64, BigRational)]| -> BigRational {
        against
            .iter()
            .map(|(b, p)| p * rational(payoff(a, *b)))
            .sum()
    };

    let mut distribution = BTreeMap::new();
    let mut value = BigRational::zero();
    for (a, pa) in &profile {
        for (b, pb) in &profile {
            *distribution.entry(a ^ b).or_insert_with(BigRational::zero) += pa * pb;
            value += pa * pb * rational(payoff(*a, *b));
        }
    }
    let mut max_gain: Option<BigRational> = None;
    for s in 0..=all_ones {
        let row_gain = expected(s, &profile) - &value;
        // Payoffs depend on a ^ b only, so the even player's deviation to s
        // earns -expected(s) against the odd player's mix.
        let col_gain = -expected(s, &profile) + &value;
        for g in [row_gain, col_gain] {
            if max_gain.as_ref().map_or(true, |m| &g > m) {
                max_gain = Some(g);
            }
        }
    }
    let max_deviation_gain = max_gain.expect("at least one deviation");
    let size = 1u64 << k;
    let uniform = BigRational::new(BigInt::one(), BigInt::from(size));
    let is_uniform =
        distribution.len() as u64 == size && distribution.values().all(|p| p == &uniform);
    Ok(ParallelReport {
        bits: k,
        distribution,
        is_equilibrium: !max_deviation_gain.is_positive(),
        is_uniform,
        max_deviation_gain,
    })
}
