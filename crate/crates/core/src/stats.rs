//! Accumulators for Monte-Carlo means and a chi-square goodness-of-fit test.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::tolerance;

/// Running sum and sum of squares; merging is associative.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Moments {
    pub n: usize,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    #[inline]
    pub fn merge(&mut self, other: &Moments) {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.n as f64
    }

    /// Standard error of the mean from the unbiased sample variance.
    pub fn std_error(&self) -> f64 {
        standard_error(self.n, self.sum, self.sum_sq)
    }
}

/// Standard error of a mean from `n` samples with the given sums.
pub fn standard_error(n: usize, sum: f64, sum_sq: f64) -> f64 {
    if n < 2 {
        return f64::INFINITY;
    }
    let nf = n as f64;
    let mean = sum / nf;
    let var = ((sum_sq / nf - mean * mean) * nf / (nf - 1.0)).max(0.0);
    (var / nf).sqrt()
}

/// Pearson chi-square statistic with its degrees of freedom and upper-tail p-value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Goodness of fit of `observed` counts to the probabilities `probs`.
///
/// Bins with probability below [`tolerance::ZERO_PROBABILITY`] are structural
/// zeros: any count there rejects outright (p-value 0), otherwise they are
/// dropped. Every remaining bin must expect at least 5 counts.
pub fn chi_square_gof(observed: &[u64], probs: &[f64]) -> Result<ChiSquareTest> {
    if observed.len() != probs.len() {
        return Err(Error::DimensionMismatch {
            expected: probs.len(),
            found: observed.len(),
        });
    }
    let total: u64 = observed.iter().sum();
    let n = total as f64;
    let mut statistic = 0.0;
    let mut bins = 0usize;
    for (bin, (&obs, &prob)) in observed.iter().zip(probs).enumerate() {
        if prob < tolerance::ZERO_PROBABILITY {
            if obs > 0 {
                return Ok(ChiSquareTest {
                    statistic: f64::INFINITY,
                    dof: 0,
                    p_value: 0.0,
                });
            }
            continue;
        }
        let expected = n * prob;
        if expected < 5.0 {
            return Err(Error::SparseBin { bin, expected });
        }
        let diff = obs as f64 - expected;
        statistic += diff * diff / expected;
        bins += 1;
    }
    let dof = bins.saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        ChiSquared::new(dof as f64)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .sf(statistic)
    };
    Ok(ChiSquareTest {
        statistic,
        dof,
        p_value,
    })
}

/// As [`chi_square_gof`], but bins expecting fewer than 5 counts are pooled
/// into one bin first. A pool still below 5 joins the smallest regular bin.
pub fn chi_square_gof_pooled(observed: &[u64], probs: &[f64]) -> Result<ChiSquareTest> {
    if observed.len() != probs.len() {
        return Err(Error::DimensionMismatch {
            expected: probs.len(),
            found: observed.len(),
        });
    }
    let n = observed.iter().sum::<u64>() as f64;
    let mut obs = Vec::new();
    let mut exp = Vec::new();
    let (mut pool_obs, mut pool_prob) = (0u64, 0.0);
    for (&o, &p) in observed.iter().zip(probs) {
        if p < tolerance::ZERO_PROBABILITY {
            obs.push(o);
            exp.push(p);
        } else if n * p < 5.0 {
            pool_obs += o;
            pool_prob += p;
        } else {
            obs.push(o);
            exp.push(p);
        }
    }
    if pool_prob > 0.0 {
        if n * pool_prob >= 5.0 {
            obs.push(pool_obs);
            exp.push(pool_prob);
        } else {
            let smallest = exp
                .iter()
                .enumerate()
                .filter(|(_, &p)| p >= tolerance::ZERO_PROBABILITY)
                .min_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| i)
                .ok_or(Error::SparseBin {
                    bin: 0,
                    expected: n * pool_prob,
                })?;
            obs[smallest] += pool_obs;
            exp[smallest] += pool_prob;
        }
    }
    chi_square_gof(&obs, &exp)
}
