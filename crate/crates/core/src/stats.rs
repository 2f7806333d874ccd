//! Small statistics helpers shared by the sampling modules.

use serde::{Deserialize, Serialize};

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Standard error of a ±1-valued mean `value` estimated from `n` draws.
pub fn sign_mean_std_error(value: f64, n: u64) -> f64 {
    ((1.0 - value * value).max(0.0) / n as f64).sqrt()
}

/// Wilson score interval for `successes` out of `trials` at normal quantile `z`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // Exact at the extremes; the general formula leaves rounding residue there.
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator; 0 for a single value).
    pub std_dev: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    /// Summarises `values` in iteration order, so the result is reproducible.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var =
            if values.len() > 1 { values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(Summary { count: values.len(), mean, std_dev: var.sqrt(), min, max })
    }

    /// 95% normal-approximation confidence interval on the mean.
    pub fn mean_ci95(&self) -> (f64, f64) {
        let half = Z_95 * self.std_dev / (self.count as f64).sqrt();
        (self.mean - half, self.mean + half)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_bounds_contain_point_estimate() {
        let (lo, hi) = wilson_interval(99, 100, Z_95);
        assert!(lo < 0.99 && 0.99 < hi);
        assert!(hi <= 1.0);
        let (lo, hi) = wilson_interval(100, 100, Z_95);
        assert!(lo > 0.95);
        assert_eq!(hi, 1.0);
        let (lo, _) = wilson_interval(0, 100, Z_95);
        assert_eq!(lo, 0.0);
    }

    #[test]
    fn wilson_matches_reference_value() {
        // 50/100 at z = 1.96: centre 0.5, half-width 0.0962 (textbook value).
        let (lo, hi) = wilson_interval(50, 100, 1.96);
        assert!((lo - 0.4038).abs() < 1e-4);
        assert!((hi - 0.5962).abs() < 1e-4);
    }

    #[test]
    fn summary_basic() {
        let s = Summary::of(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.std_dev, 1.0);
        assert_eq!((s.min, s.max), (1.0, 3.0));
        assert!(Summary::of(&[]).is_none());
    }
}
