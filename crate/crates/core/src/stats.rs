//! Sample summaries: mean and standard error, Spearman correlation, bootstrap
//! percentile intervals.

use alloc::vec::Vec;

use rand::Rng;

use crate::distribution::RandomStream;
use crate::math::{compensated_sum, sqrt};

/// Normal quantile for a two-sided 95% interval.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub std_error: f64,
    pub count: usize,
}

impl Summary {
    /// Two-pass mean and CLT standard error. Summation order is the slice
    /// order, so the result is a pure function of the samples.
    pub fn of(samples: &[f64]) -> Self {
        let count = samples.len();
        if count == 0 {
            return Self {
                mean: f64::NAN,
                std_error: f64::NAN,
                count,
            };
        }
        let n = count as f64;
        let mean = compensated_sum(samples.iter().copied()) / n;
        let std_error = if count < 2 {
            0.0
        } else {
            let ss = compensated_sum(samples.iter().map(|v| (v - mean) * (v - mean)));
            sqrt(ss / (n - 1.0) / n)
        };
        Self {
            mean,
            std_error,
            count,
        }
    }

    pub fn ci95(&self) -> (f64, f64) {
        (self.mean - Z95 * self.std_error, self.mean + Z95 * self.std_error)
    }
}

/// Ranks starting at 1, ties sharing their average rank.
pub fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = alloc::vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / sqrt(sxx * syy)
}

/// Spearman rank correlation; `NaN` for fewer than two points or a constant
/// input.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "spearman: length mismatch");
    if x.len() < 2 {
        return f64::NAN;
    }
    pearson(&ranks(x), &ranks(y))
}

/// `max / min` of the absolute values.
pub fn spread(values: &[f64]) -> f64 {
    let hi = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let lo = values.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    hi / lo
}

/// Percentile bootstrap interval for the mean.
pub fn bootstrap_ci95(samples: &[f64], resamples: usize, stream: &RandomStream) -> (f64, f64) {
    let n = samples.len();
    if n == 0 || resamples == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mut rng = stream.rng();
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| {
            let mut s = 0.0;
            for _ in 0..n {
                s += samples[rng.random_range(0..n)];
            }
            s / n as f64
        })
        .collect();
    means.sort_by(f64::total_cmp);
    let pick = |q: f64| {
        let idx = libm::round(q * (resamples - 1) as f64) as usize;
        means[idx.min(resamples - 1)]
    };
    (pick(0.025), pick(0.975))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_of_known_samples() {
        let s = Summary::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.std_error - sqrt(5.0 / 3.0 / 4.0)).abs() < 1e-15);
        let (lo, hi) = s.ci95();
        assert!((hi - lo - 2.0 * Z95 * s.std_error).abs() < 1e-15);
        assert_eq!(Summary::of(&[7.0]).std_error, 0.0);
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(ranks(&[3.0, 1.0, 3.0, 2.0]), alloc::vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn spearman_monotone() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert!((spearman(&x, &[1.0, 4.0, 9.0, 16.0, 25.0]) - 1.0).abs() < 1e-15);
        assert!((spearman(&x, &[5.0, 4.0, 3.0, 2.0, 1.0]) + 1.0).abs() < 1e-15);
        assert!((spearman(&x, &[1.0, 3.0, 2.0, 4.0, 5.0]) - 0.9).abs() < 1e-12);
    }

    #[test]
    fn bootstrap_brackets_mean() {
        let samples: Vec<f64> = (0..500).map(|k| (k % 17) as f64).collect();
        let m = Summary::of(&samples).mean;
        let (lo, hi) = bootstrap_ci95(&samples, 400, &RandomStream::new(1, 2));
        assert!(lo < m && m < hi);
    }
}
