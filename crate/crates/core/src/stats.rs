//! Running moments and the few test statistics the experiments need.

use serde::Serialize;
use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, DiscreteCDF};

use crate::error::{invalid, Result};

/// Count, mean and centered second moment, updated one value at a time
/// (Welford) and merged pairwise (Chan et al.). Merging in a fixed order
/// gives bit-identical results however the values were partitioned into chunks
/// of fixed size.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = self.count + other.count;
        let d = other.mean - self.mean;
        self.mean += d * other.count as f64 / n as f64;
        self.m2 += other.m2 + d * d * (self.count as f64 * other.count as f64) / n as f64;
        self.count = n;
    }

    /// Unbiased sample variance (0 with fewer than two values).
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    /// `sd / √count`.
    pub fn stderr(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

impl FromIterator<f64> for Moments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Moments::default();
        for x in iter {
            m.push(x);
        }
        m
    }
}

/// `a` exceeds `b` by at least `k` combined standard errors.
pub fn separated(a: f64, se_a: f64, b: f64, se_b: f64, k: f64) -> bool {
    a - b >= k * (se_a * se_a + se_b * se_b).sqrt()
}

/// `|a − b| ≤ k` combined standard errors (`se_b` may be 0 for an exact value).
pub fn within(a: f64, se_a: f64, b: f64, se_b: f64, k: f64) -> bool {
    (a - b).abs() <= k * (se_a * se_a + se_b * se_b).sqrt()
}

/// Pearson statistic and upper-tail p-value against expected counts.
pub fn chi_square(observed: &[f64], expected: &[f64]) -> Result<(f64, f64)> {
    if observed.len() != expected.len() || observed.len() < 2 {
        return Err(invalid("chi-square needs matching tables of at least two cells"));
    }
    if expected.iter().any(|&e| e <= 0.0) {
        return Err(invalid("chi-square expected counts must be positive"));
    }
    let stat: f64 = observed.iter().zip(expected).map(|(o, e)| (o - e).powi(2) / e).sum();
    let dist = ChiSquared::new((observed.len() - 1) as f64).map_err(|e| invalid(e.to_string()))?;
    Ok((stat, 1.0 - dist.cdf(stat)))
}

/// One-sided DKW band half-width: `P(sup (F_emp − F) > λ) ≤ e^{−2Nλ²} = 1 − confidence`.
pub fn dkw_band(samples: usize, confidence: f64) -> f64 {
    ((1.0 / (1.0 - confidence)).ln() / (2.0 * samples as f64)).sqrt()
}

/// `P(Bin(trials, p) ≤ x)` for `x = 0..=trials`.
pub fn binomial_cdf_table(trials: u64, p: f64) -> Result<Vec<f64>> {
    let b = Binomial::new(p, trials).map_err(|e| invalid(e.to_string()))?;
    Ok((0..=trials).map(|x| b.cdf(x)).collect())
}
