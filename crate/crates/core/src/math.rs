//! Scalar helpers. Everything goes through `libm` so results do not depend on
//! the platform libm and the crate builds without `std`.

pub use libm::{cosh, exp, expm1, fabs as abs, log, log1p, pow, sqrt, tanh};

/// Dimensions above this use compensated summation for inner products.
pub const COMPENSATED_DIM: usize = 10_000;

#[inline]
pub fn powi(x: f64, k: u32) -> f64 {
    let mut acc = 1.0;
    for _ in 0..k {
        acc *= x;
    }
    acc
}

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if abs(self.sum) >= abs(v) {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.len() > COMPENSATED_DIM {
        compensated_sum(a.iter().zip(b).map(|(x, y)| x * y))
    } else {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }
}

/// `log Σ exp(v)` with the maximum subtracted first. Returns `-inf` for an
/// empty slice.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let s: f64 = values.iter().map(|&v| exp(v - max)).sum();
    max + log(s)
}

pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for j in 0..k {
        acc = acc * (n - j) as u128 / (j + 1) as u128;
    }
    acc
}

/// `(k-1)!!` for even `k`, i.e. `E g^k` for a standard Gaussian; zero for odd `k`.
pub fn gaussian_moment(k: u32) -> f64 {
    if k % 2 == 1 {
        return 0.0;
    }
    let mut acc = 1.0;
    let mut j = k as i64 - 1;
    while j > 1 {
        acc *= j as f64;
        j -= 2;
    }
    acc
}

/// `E Π_j g_j^{e_j}` for independent standard Gaussians.
pub fn gaussian_mean_monomial(exponents: &[u32]) -> f64 {
    exponents.iter().map(|&k| gaussian_moment(k)).product()
}

/// Relative difference with a floor on the denominator.
pub fn rel_diff(a: f64, b: f64, floor: f64) -> f64 {
    abs(a - b) / abs(b).max(floor)
}
