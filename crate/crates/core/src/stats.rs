//! Counting statistics used to compare Monte Carlo runs with analytic values.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Standard error of a binomial proportion with success probability `p` over `n` trials.
pub fn binomial_sigma(p: f64, n: u64) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Combined standard error of the difference of two independent proportions.
pub fn difference_sigma(p1: f64, n1: u64, p2: f64, n2: u64) -> f64 {
    binomial_sigma(p1, n1).hypot(binomial_sigma(p2, n2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
}

impl ChiSquareTest {
    fn from_statistic(statistic: f64, dof: usize) -> Self {
        let p_value = if statistic.is_infinite() {
            0.0
        } else if dof == 0 {
            1.0
        } else {
            let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
            1.0 - dist.cdf(statistic)
        };
        Self {
            statistic,
            degrees_of_freedom: dof,
            p_value,
        }
    }

    /// True when the null hypothesis survives at `significance`.
    pub fn passes(&self, significance: f64) -> bool {
        self.p_value >= significance
    }
}

/// Pearson goodness-of-fit of `observed` counts against probabilities `expected`.
///
/// Bins with zero expected probability must have zero counts; a count in such
/// a bin makes the statistic infinite.
pub fn chi_square_gof(observed: &[u64], expected: &[f64]) -> ChiSquareTest {
    assert_eq!(observed.len(), expected.len(), "bin count mismatch");
    let n: u64 = observed.iter().sum();
    let n = n as f64;
    let mut stat = 0.0;
    let mut bins = 0usize;
    for (&o, &p) in observed.iter().zip(expected) {
        if p <= 0.0 {
            if o > 0 {
                stat = f64::INFINITY;
            }
            continue;
        }
        let e = n * p;
        stat += (o as f64 - e).powi(2) / e;
        bins += 1;
    }
    ChiSquareTest::from_statistic(stat, bins.saturating_sub(1))
}

/// Pearson test that two count vectors come from the same distribution.
///
/// Bins empty in both samples are dropped.
pub fn chi_square_homogeneity(a: &[u64], b: &[u64]) -> ChiSquareTest {
    assert_eq!(a.len(), b.len(), "bin count mismatch");
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    let total = (na + nb) as f64;
    let mut stat = 0.0;
    let mut bins = 0usize;
    for (&x, &y) in a.iter().zip(b) {
        let col = (x + y) as f64;
        if col == 0.0 {
            continue;
        }
        let ex = col * na as f64 / total;
        let ey = col * nb as f64 / total;
        stat += (x as f64 - ex).powi(2) / ex + (y as f64 - ey).powi(2) / ey;
        bins += 1;
    }
    ChiSquareTest::from_statistic(stat, bins.saturating_sub(1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gof_reference_value() {
        // Same counts as a standard textbook uniformity example.
        let t = chi_square_gof(&[28, 31, 40, 35], &[0.25; 4]);
        assert!((t.statistic - 2.417_910_447_761_194).abs() < 1e-12);
        assert!((t.p_value - 0.490_309_306_965_388_3).abs() < 1e-9);
        assert_eq!(t.degrees_of_freedom, 3);
    }

    #[test]
    fn gof_impossible_bin() {
        let t = chi_square_gof(&[10, 1], &[1.0, 0.0]);
        assert!(t.statistic.is_infinite());
        assert!(!t.passes(0.001));
    }

    #[test]
    fn homogeneity_identical_samples() {
        let t = chi_square_homogeneity(&[10, 20, 0, 30], &[10, 20, 0, 30]);
        assert_eq!(t.statistic, 0.0);
        assert_eq!(t.degrees_of_freedom, 2);
        assert!(t.passes(0.001));
    }

    #[test]
    fn homogeneity_detects_shift() {
        let t = chi_square_homogeneity(&[500, 500], &[800, 200]);
        assert!(!t.passes(0.001));
    }

    #[test]
    fn sigma() {
        assert!((binomial_sigma(0.25, 100_000) - 0.001_369_306_393_762_915).abs() < 1e-15);
        assert!(binomial_sigma(0.5, 0).is_infinite());
    }
}
