//! Pearson chi-square test for uniformity over `m` buckets.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("no samples")]
    Empty,
    #[error("sample {value} is not below m = {m}")]
    OutOfRange { value: u64, m: u64 },
    #[error("need at least 2 buckets, got {0}")]
    TooFewBuckets(u64),
    #[error("significance level must be in (0, 1), got {0}")]
    BadAlpha(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareReport {
    pub m: u64,
    pub samples: u64,
    pub counts: Vec<u64>,
    pub degrees_of_freedom: u64,
    pub alpha: f64,
    pub statistic: f64,
    pub critical: f64,
    pub pass: bool,
}

/// Upper `alpha` quantile of the chi-square distribution with `df` degrees
/// of freedom.
pub fn chi_square_critical(df: u64, alpha: f64) -> Result<f64, StatsError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatsError::BadAlpha(alpha));
    }
    if df == 0 {
        return Err(StatsError::TooFewBuckets(1));
    }
    let dist = ChiSquared::new(df as f64).expect("df > 0");
    Ok(dist.inverse_cdf(1.0 - alpha))
}

/// `Σ (O_j - E)² / E` with `E = N/m`; passes iff the statistic is below the
/// critical value.
pub fn chi_square_uniformity(samples: &[u64], m: u64, alpha: f64) -> Result<ChiSquareReport, StatsError> {
    if m < 2 {
        return Err(StatsError::TooFewBuckets(m));
    }
    if samples.is_empty() {
        return Err(StatsError::Empty);
    }
    let critical = chi_square_critical(m - 1, alpha)?;
    let mut counts = vec![0u64; m as usize];
    for &v in samples {
        if v >= m {
            return Err(StatsError::OutOfRange { value: v, m });
        }
        counts[v as usize] += 1;
    }
    // Σ (O - N/m)² / (N/m) = (m Σ O² - N²) / N, exact up to the final division.
    let n = samples.len() as u128;
    let sum_sq: u128 = counts.iter().map(|&c| u128::from(c) * u128::from(c)).sum();
    let numerator = u128::from(m) * sum_sq - n * n;
    let statistic = numerator as f64 / n as f64;
    Ok(ChiSquareReport {
        m,
        samples: n as u64,
        counts,
        degrees_of_freedom: m - 1,
        alpha,
        statistic,
        critical,
        pass: statistic < critical,
    })
}
