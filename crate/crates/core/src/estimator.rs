//! Expected suprema `E sup_{t∈T} ⟨ξ, t⟩`: exact enumeration over discrete
//! product laws, and Monte Carlo with CLT (optionally bootstrap) intervals.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::distribution::{CoordinateDistribution, RandomStream};
use crate::error::{invalid, Error, Result};
use crate::gibbs;
use crate::index_set::IndexSet;
use crate::math::{abs, CompensatedSum};
use crate::mc;
use crate::stats::{bootstrap_ci95, Summary, Z95};

/// Fewest replicates accepted for a Monte-Carlo estimate.
pub const MIN_REPLICATES: usize = 100;
/// Default replicate budget.
pub const DEFAULT_REPLICATES: usize = 100_000;
/// Largest number of product-law configurations enumerated exactly.
pub const MAX_CONFIGURATIONS: u128 = 1 << 22;
/// Largest dimension for exhaustive sign enumeration.
pub const MAX_SIGN_DIM: usize = 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    MonteCarlo,
    ExactEnumeration,
    ClosedForm,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::MonteCarlo => "mc",
            Method::ExactEnumeration => "exact-enumeration",
            Method::ClosedForm => "closed-form",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupremumEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub ci95: (f64, f64),
    pub replicates: usize,
    pub seed: u64,
    pub method: Method,
    /// Percentile bootstrap interval, when requested.
    pub bootstrap_ci95: Option<(f64, f64)>,
}

impl SupremumEstimate {
    pub fn exact(value: f64, configurations: usize, method: Method) -> Self {
        Self {
            mean: value,
            std_error: 0.0,
            ci95: (value, value),
            replicates: configurations.max(1),
            seed: 0,
            method,
            bootstrap_ci95: None,
        }
    }

    pub fn from_samples(samples: &[f64], seed: u64) -> Self {
        let s = Summary::of(samples);
        Self {
            mean: s.mean,
            std_error: s.std_error,
            ci95: s.ci95(),
            replicates: s.count,
            seed,
            method: Method::MonteCarlo,
            bootstrap_ci95: None,
        }
    }

    /// `self − other` with standard errors added in quadrature.
    pub fn difference(&self, other: &SupremumEstimate) -> SupremumEstimate {
        let mean = self.mean - other.mean;
        let se = libm::sqrt(self.std_error * self.std_error + other.std_error * other.std_error);
        let method = if self.method == Method::MonteCarlo || other.method == Method::MonteCarlo {
            Method::MonteCarlo
        } else {
            self.method
        };
        SupremumEstimate {
            mean,
            std_error: se,
            ci95: (mean - Z95 * se, mean + Z95 * se),
            replicates: self.replicates.min(other.replicates),
            seed: self.seed,
            method,
            bootstrap_ci95: None,
        }
    }

    /// `|mean − target| ≤ k · std_error`.
    pub fn covers(&self, target: f64, k: f64) -> bool {
        abs(self.mean - target) <= k * self.std_error
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateOptions {
    pub replicates: usize,
    /// Draw coordinates through the inverse CDF of one shared uniform per
    /// coordinate, so that two laws run on the same stream are coupled.
    pub paired: bool,
    /// Bootstrap resamples for a percentile interval; `None` skips it.
    pub bootstrap: Option<usize>,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self {
            replicates: DEFAULT_REPLICATES,
            paired: false,
            bootstrap: None,
        }
    }
}

impl EstimateOptions {
    pub fn with_replicates(replicates: usize) -> Self {
        Self {
            replicates,
            ..Self::default()
        }
    }
}

/// `max_t ⟨x, t⟩`.
pub fn exact_sup(set: &IndexSet, x: &[f64]) -> Result<f64> {
    set.check_dim(x)?;
    Ok(set.sup_inner(x))
}

fn check_replicates(replicates: usize) -> Result<()> {
    if replicates < MIN_REPLICATES {
        return Err(Error::TooFewReplicates {
            found: replicates,
            min: MIN_REPLICATES,
        });
    }
    Ok(())
}

fn fill(dist: &CoordinateDistribution, paired: bool, rng: &mut crate::distribution::StreamRng, x: &mut [f64]) {
    if paired {
        dist.fill_paired(rng, x);
    } else {
        dist.fill(rng, x);
    }
}

/// Realized suprema, one per replicate. Under `paired`, two laws sampled from
/// the same stream see the same uniforms.
pub fn sample_suprema(
    set: &IndexSet,
    dist: &CoordinateDistribution,
    replicates: usize,
    paired: bool,
    stream: &RandomStream,
) -> Vec<f64> {
    let n = set.dim();
    mc::replicate(replicates, stream, || vec![0.0; n], |x, rng| {
        fill(dist, paired, rng, x);
        set.sup_inner(x)
    })
}

/// Monte-Carlo `E sup_t ⟨ξ, t⟩`.
pub fn estimate_complexity(
    set: &IndexSet,
    dist: &CoordinateDistribution,
    options: &EstimateOptions,
    stream: &RandomStream,
) -> Result<SupremumEstimate> {
    check_replicates(options.replicates)?;
    let samples = sample_suprema(set, dist, options.replicates, options.paired, stream);
    let mut est = SupremumEstimate::from_samples(&samples, stream.master_seed);
    if let Some(b) = options.bootstrap {
        est.bootstrap_ci95 = Some(bootstrap_ci95(&samples, b, &stream.tagged("bootstrap")));
    }
    Ok(est)
}

/// `E sup_t ⟨ε, t⟩` over all `2^n` sign vectors.
pub fn exact_rademacher_complexity(set: &IndexSet) -> Result<SupremumEstimate> {
    let n = set.dim();
    if n > MAX_SIGN_DIM {
        return Err(Error::CapExceeded {
            what: "dimension for sign enumeration",
            value: n as u128,
            cap: MAX_SIGN_DIM as u128,
        });
    }
    let mut x = vec![1.0; n];
    let mut acc = CompensatedSum::new();
    let total = 1u64 << n;
    for mask in 0..total {
        for (j, v) in x.iter_mut().enumerate() {
            *v = if mask >> j & 1 == 1 { -1.0 } else { 1.0 };
        }
        acc.add(set.sup_inner(&x));
    }
    Ok(SupremumEstimate::exact(
        acc.value() / total as f64,
        total as usize,
        Method::ExactEnumeration,
    ))
}

/// Number of configurations of a discrete product law on `n` coordinates, if
/// it is within [`MAX_CONFIGURATIONS`].
pub fn enumerable_configurations(dist: &CoordinateDistribution, n: usize) -> Option<usize> {
    let atoms = dist.discrete_support()?.len() as u128;
    let mut total: u128 = 1;
    for _ in 0..n {
        total = total.checked_mul(atoms)?;
        if total > MAX_CONFIGURATIONS {
            return None;
        }
    }
    Some(total as usize)
}

/// `E sup_t ⟨ξ, t⟩` for a discrete product law, by enumeration.
pub fn exact_discrete_complexity(
    set: &IndexSet,
    dist: &CoordinateDistribution,
) -> Result<SupremumEstimate> {
    let atoms = dist
        .discrete_support()
        .ok_or_else(|| invalid("distribution", "must be discrete for exact enumeration"))?;
    let n = set.dim();
    let Some(total) = enumerable_configurations(dist, n) else {
        return Err(Error::CapExceeded {
            what: "product-law configurations",
            value: libm::pow(atoms.len() as f64, n as f64) as u128,
            cap: MAX_CONFIGURATIONS,
        });
    };
    let mut digits = vec![0usize; n];
    let mut x = vec![0.0; n];
    let mut acc = CompensatedSum::new();
    for _ in 0..total {
        let mut p = 1.0;
        for (v, &d) in x.iter_mut().zip(&digits) {
            *v = atoms[d].0;
            p *= atoms[d].1;
        }
        acc.add(p * set.sup_inner(&x));
        for d in digits.iter_mut() {
            *d += 1;
            if *d < atoms.len() {
                break;
            }
            *d = 0;
        }
    }
    Ok(SupremumEstimate::exact(acc.value(), total, Method::ExactEnumeration))
}

/// Exact when the law is discrete and enumerable, Monte Carlo otherwise.
pub fn complexity(
    set: &IndexSet,
    dist: &CoordinateDistribution,
    options: &EstimateOptions,
    stream: &RandomStream,
) -> Result<SupremumEstimate> {
    if enumerable_configurations(dist, set.dim()).is_some() {
        exact_discrete_complexity(set, dist)
    } else {
        estimate_complexity(set, dist, options, stream)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxComplexity {
    /// `E F_β(ξ)`.
    pub softmax: SupremumEstimate,
    /// `E sup_t ⟨ξ, t⟩` on the same draws.
    pub supremum: SupremumEstimate,
    /// `log|T| / β`.
    pub certified_offset: f64,
    /// Replicates where `F_β(ξ) < sup` or `F_β(ξ) − sup > log|T|/β` beyond
    /// rounding.
    pub domination_violations: usize,
}

/// Monte-Carlo `E F_β(ξ)`, together with the supremum on the same draws.
pub fn softmax_complexity(
    set: &IndexSet,
    dist: &CoordinateDistribution,
    beta: f64,
    options: &EstimateOptions,
    stream: &RandomStream,
) -> Result<SoftmaxComplexity> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(invalid("beta", "must be positive and finite"));
    }
    check_replicates(options.replicates)?;
    let n = set.dim();
    let offset = set.log_cardinality() / beta;
    let pairs = mc::replicate(options.replicates, stream, || vec![0.0; n], |x, rng| {
        fill(dist, options.paired, rng, x);
        (gibbs::log_partition_unchecked(set, beta, x), set.sup_inner(x))
    });
    let mut violations = 0;
    let (mut soft, mut sup) = (Vec::with_capacity(pairs.len()), Vec::with_capacity(pairs.len()));
    for (f, s) in pairs {
        let slack = 1e-12 * abs(f).max(abs(s)).max(1.0);
        if f < s - slack || f - s > offset + slack {
            violations += 1;
        }
        soft.push(f);
        sup.push(s);
    }
    Ok(SoftmaxComplexity {
        softmax: SupremumEstimate::from_samples(&soft, stream.master_seed),
        supremum: SupremumEstimate::from_samples(&sup, stream.master_seed),
        certified_offset: offset,
        domination_violations: violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index_set::BasisMode;
    use core::f64::consts::FRAC_2_PI;

    fn s() -> RandomStream {
        RandomStream::new(0xC0FFEE, 1)
    }

    #[test]
    fn exact_sup_examples() {
        let a = IndexSet::explicit(&[[2.0, -1.0]]).unwrap();
        assert_eq!(exact_sup(&a, &[1.0, 3.0]).unwrap(), -1.0);
        let pm = IndexSet::basis(2, BasisMode::Signed).unwrap();
        assert_eq!(exact_sup(&pm, &[-2.5, 0.0]).unwrap(), 2.5);
        let sk = IndexSet::spin_quadratic(2, false).unwrap();
        assert_eq!(exact_sup(&sk, &[-0.8]).unwrap(), 0.8);
        assert!(exact_sup(&sk, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn exact_rademacher_examples() {
        for n in 1..=10 {
            let b = IndexSet::basis(n, BasisMode::Canonical).unwrap();
            let r = exact_rademacher_complexity(&b).unwrap();
            assert_eq!(r.mean, 1.0 - libm::pow(2.0, 1.0 - n as f64));
            assert_eq!(r.method, Method::ExactEnumeration);
            assert_eq!(r.std_error, 0.0);
        }
        let t = IndexSet::explicit(&[[1.0, 1.0], [1.0, -1.0]]).unwrap();
        assert_eq!(exact_rademacher_complexity(&t).unwrap().mean, 1.0);
    }

    #[test]
    fn discrete_enumeration_agrees_with_signs() {
        let t = IndexSet::explicit(&[[0.3, -1.0, 0.2], [1.0, 0.1, -0.4], [-0.5, 0.5, 0.5]]).unwrap();
        let a = exact_rademacher_complexity(&t).unwrap().mean;
        let b = exact_discrete_complexity(&t, &CoordinateDistribution::rademacher())
            .unwrap()
            .mean;
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn monte_carlo_examples() {
        let b3 = IndexSet::basis(3, BasisMode::Canonical).unwrap();
        let e = estimate_complexity(
            &b3,
            &CoordinateDistribution::rademacher(),
            &EstimateOptions::with_replicates(100_000),
            &s(),
        )
        .unwrap();
        assert!(e.covers(0.75, 4.0), "{e:?}");
        assert!((e.ci95.1 - e.mean - Z95 * e.std_error).abs() < 1e-15);

        let pm = IndexSet::basis(1, BasisMode::Signed).unwrap();
        let e = estimate_complexity(
            &pm,
            &CoordinateDistribution::gaussian(),
            &EstimateOptions::with_replicates(200_000),
            &s(),
        )
        .unwrap();
        assert!(e.covers(libm::sqrt(FRAC_2_PI), 4.0), "{e:?}");

        let single = IndexSet::explicit(&[[1.0, 2.0]]).unwrap();
        let e = estimate_complexity(
            &single,
            &CoordinateDistribution::gaussian(),
            &EstimateOptions::with_replicates(10_000),
            &s(),
        )
        .unwrap();
        assert!(e.covers(0.0, 4.0));
    }

    #[test]
    fn replicate_floor() {
        let b = IndexSet::basis(2, BasisMode::Canonical).unwrap();
        let r = estimate_complexity(
            &b,
            &CoordinateDistribution::gaussian(),
            &EstimateOptions::with_replicates(99),
            &s(),
        );
        assert_eq!(r, Err(Error::TooFewReplicates { found: 99, min: 100 }));
    }

    #[test]
    fn bootstrap_interval_present() {
        let b = IndexSet::basis(4, BasisMode::Canonical).unwrap();
        let o = EstimateOptions {
            replicates: 2_000,
            paired: false,
            bootstrap: Some(200),
        };
        let e = estimate_complexity(&b, &CoordinateDistribution::gaussian(), &o, &s()).unwrap();
        let (lo, hi) = e.bootstrap_ci95.unwrap();
        assert!(lo < e.mean && e.mean < hi);
    }

    #[test]
    fn softmax_dominates_supremum() {
        let b = IndexSet::basis(4, BasisMode::Canonical).unwrap();
        let r = softmax_complexity(
            &b,
            &CoordinateDistribution::gaussian(),
            2.0,
            &EstimateOptions::with_replicates(5_000),
            &s(),
        )
        .unwrap();
        assert_eq!(r.domination_violations, 0);
        assert!(r.softmax.mean >= r.supremum.mean);
        assert!(r.softmax.mean - r.supremum.mean <= r.certified_offset);

        let single = IndexSet::explicit(&[[1.0]]).unwrap();
        let r = softmax_complexity(
            &single,
            &CoordinateDistribution::rademacher(),
            7.0,
            &EstimateOptions::with_replicates(5_000),
            &s(),
        )
        .unwrap();
        assert!(r.softmax.covers(0.0, 4.0));
    }

    #[test]
    fn difference_adds_errors_in_quadrature() {
        let a = SupremumEstimate::from_samples(&[1.0, 2.0, 3.0], 1);
        let b = SupremumEstimate::exact(0.5, 8, Method::ExactEnumeration);
        let d = a.difference(&b);
        assert_eq!(d.mean, 1.5);
        assert_eq!(d.std_error, a.std_error);
        assert_eq!(d.method, Method::MonteCarlo);
    }
}
