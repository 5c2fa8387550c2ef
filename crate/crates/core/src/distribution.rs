//! Coordinate laws with declared moments, and reproducible random substreams.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_2_PI, PI, SQRT_2};
use core::fmt;
use core::str::FromStr;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::math::{abs, exp, log, pow, sqrt};

/// The random generator behind every stream.
pub type StreamRng = ChaCha8Rng;

/// SplitMix64 finalizer (Steele, Lea & Flood 2014).
pub const fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a.
pub const fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    let mut i = 0;
    while i < bytes.len() {
        h ^= bytes[i] as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
        i += 1;
    }
    h
}

/// `mix64(fnv1a64(tag) + mix64(index))`.
pub fn substream_id(tag: &str, index: u64) -> u64 {
    mix64(fnv1a64(tag.as_bytes()).wrapping_add(mix64(index)))
}

/// A `(master seed, substream)` pair. Identical pairs produce identical
/// sequences regardless of thread schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RandomStream {
    pub master_seed: u64,
    pub substream_id: u64,
}

impl RandomStream {
    pub const fn new(master_seed: u64, substream_id: u64) -> Self {
        Self {
            master_seed,
            substream_id,
        }
    }

    pub fn for_component(master_seed: u64, tag: &str) -> Self {
        Self::new(master_seed, substream_id(tag, 0))
    }

    /// Derived stream for replicate (or cell) `index`.
    pub fn child(&self, index: u64) -> Self {
        Self::new(
            self.master_seed,
            mix64(self.substream_id.wrapping_add(mix64(index))),
        )
    }

    /// Derived stream for a named sub-component.
    pub fn tagged(&self, tag: &str) -> Self {
        Self::new(
            self.master_seed,
            mix64(self.substream_id ^ fnv1a64(tag.as_bytes())),
        )
    }

    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.substream_id);
        rng
    }
}

/// Uniform on the open interval `(0, 1)`.
pub fn open_uniform<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Law {
    Rademacher,
    Gaussian,
    /// Uniform on `[−√3, √3]`.
    UniformSymmetric,
    /// Density `½ e^{−|x|}`, variance 2.
    Laplace,
    /// Laplace scaled to unit variance.
    LaplaceNormalized,
    /// `±M` with probability `1/(2M²)` each, `0` otherwise. Needs `M ≥ 1`.
    ScaledRademacher { bound: f64 },
    /// Mean-zero, unit-variance two-point law with `P(ξ > 0) = p`. Skewed
    /// unless `p = ½`.
    TwoPoint { p: f64 },
}

/// Closed-form moments of a coordinate law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub variance: f64,
    pub third_moment: f64,
    /// `σ_3^3 = E|ξ|^3`
    pub abs_third: f64,
    /// `σ_4^4 = E ξ^4`
    pub fourth: f64,
    /// `M` with `|ξ| ≤ M` almost surely.
    pub bound: Option<f64>,
}

impl Moments {
    pub fn sigma3(&self) -> f64 {
        pow(self.abs_third, 1.0 / 3.0)
    }

    pub fn sigma4(&self) -> f64 {
        sqrt(sqrt(self.fourth))
    }
}

/// A validated coordinate law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordinateDistribution {
    law: Law,
}

impl CoordinateDistribution {
    pub fn new(law: Law) -> Result<Self> {
        match law {
            Law::ScaledRademacher { bound } if !(bound >= 1.0) || !bound.is_finite() => {
                Err(invalid("M", "scaled-rademacher needs a finite M ≥ 1"))
            }
            Law::TwoPoint { p } if !(p > 0.0 && p < 1.0) => {
                Err(invalid("p", "two-point needs 0 < p < 1"))
            }
            _ => Ok(Self { law }),
        }
    }

    pub fn rademacher() -> Self {
        Self {
            law: Law::Rademacher,
        }
    }

    pub fn gaussian() -> Self {
        Self { law: Law::Gaussian }
    }

    pub fn laplace() -> Self {
        Self { law: Law::Laplace }
    }

    pub fn law(&self) -> Law {
        self.law
    }

    pub fn is_symmetric(&self) -> bool {
        match self.law {
            Law::TwoPoint { p } => p == 0.5,
            _ => true,
        }
    }

    pub fn moments(&self) -> Moments {
        match self.law {
            Law::Rademacher => Moments {
                variance: 1.0,
                third_moment: 0.0,
                abs_third: 1.0,
                fourth: 1.0,
                bound: Some(1.0),
            },
            Law::Gaussian => Moments {
                variance: 1.0,
                third_moment: 0.0,
                abs_third: 2.0 * sqrt(FRAC_2_PI),
                fourth: 3.0,
                bound: None,
            },
            Law::UniformSymmetric => Moments {
                variance: 1.0,
                third_moment: 0.0,
                abs_third: 3.0 * sqrt(3.0) / 4.0,
                fourth: 9.0 / 5.0,
                bound: Some(sqrt(3.0)),
            },
            Law::Laplace => Moments {
                variance: 2.0,
                third_moment: 0.0,
                abs_third: 6.0,
                fourth: 24.0,
                bound: None,
            },
            Law::LaplaceNormalized => Moments {
                variance: 1.0,
                third_moment: 0.0,
                abs_third: 6.0 / (2.0 * SQRT_2),
                fourth: 6.0,
                bound: None,
            },
            Law::ScaledRademacher { bound } => Moments {
                variance: 1.0,
                third_moment: 0.0,
                abs_third: bound,
                fourth: bound * bound,
                bound: Some(bound),
            },
            Law::TwoPoint { p } => {
                let q = 1.0 - p;
                let hi = sqrt(q / p);
                let lo = sqrt(p / q);
                Moments {
                    variance: 1.0,
                    third_moment: (q - p) / sqrt(p * q),
                    abs_third: p * hi * hi * hi + q * lo * lo * lo,
                    fourth: (1.0 - 3.0 * p * q) / (p * q),
                    bound: Some(hi.max(lo)),
                }
            }
        }
    }

    /// Atoms and probabilities for discrete laws.
    pub fn discrete_support(&self) -> Option<Vec<(f64, f64)>> {
        match self.law {
            Law::Rademacher => Some(vec![(-1.0, 0.5), (1.0, 0.5)]),
            Law::ScaledRademacher { bound } => {
                let q = 0.5 / (bound * bound);
                Some(vec![(-bound, q), (0.0, 1.0 - 2.0 * q), (bound, q)])
            }
            Law::TwoPoint { p } => {
                let q = 1.0 - p;
                Some(vec![(-sqrt(p / q), q), (sqrt(q / p), p)])
            }
            _ => None,
        }
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.law {
            Law::Rademacher => {
                if rng.next_u32() & 1 == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
            Law::Gaussian => StandardNormal.sample(rng),
            Law::UniformSymmetric => (2.0 * rng.random::<f64>() - 1.0) * sqrt(3.0),
            Law::Laplace | Law::LaplaceNormalized => {
                let e: f64 = Exp1.sample(rng);
                let v = if rng.next_u32() & 1 == 0 { e } else { -e };
                if self.law == Law::Laplace {
                    v
                } else {
                    v / SQRT_2
                }
            }
            Law::ScaledRademacher { .. } | Law::TwoPoint { .. } => {
                self.inverse_cdf(open_uniform(rng))
            }
        }
    }

    /// Quantile function; used for paired (common-uniform) sampling.
    pub fn inverse_cdf(&self, u: f64) -> f64 {
        match self.law {
            Law::Rademacher => {
                if u < 0.5 {
                    -1.0
                } else {
                    1.0
                }
            }
            Law::Gaussian => normal_quantile(u),
            Law::UniformSymmetric => (2.0 * u - 1.0) * sqrt(3.0),
            Law::Laplace | Law::LaplaceNormalized => {
                let v = if u < 0.5 {
                    log(2.0 * u)
                } else {
                    -log(2.0 * (1.0 - u))
                };
                if self.law == Law::Laplace {
                    v
                } else {
                    v / SQRT_2
                }
            }
            Law::ScaledRademacher { bound } => {
                let q = 0.5 / (bound * bound);
                if u < q {
                    -bound
                } else if u < 1.0 - q {
                    0.0
                } else {
                    bound
                }
            }
            Law::TwoPoint { p } => {
                let q = 1.0 - p;
                if u < q {
                    -sqrt(p / q)
                } else {
                    sqrt(q / p)
                }
            }
        }
    }

    pub fn fill<R: RngCore + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for v in out {
            *v = self.sample(rng);
        }
    }

    pub fn fill_paired<R: RngCore + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for v in out {
            *v = self.inverse_cdf(open_uniform(rng));
        }
    }

    /// `n` independent draws from `stream`.
    pub fn sample_vector(&self, n: usize, stream: &RandomStream) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(invalid("n", "must be at least 1"));
        }
        let mut rng = stream.rng();
        let mut out = vec![0.0; n];
        self.fill(&mut rng, &mut out);
        Ok(out)
    }

    /// Empirical raw moments of orders 1–4 against their declared values.
    pub fn empirical_moment_check(
        &self,
        sample_count: usize,
        stream: &RandomStream,
    ) -> Result<MomentCheck> {
        const MIN_SAMPLES: usize = 10_000;
        if sample_count < MIN_SAMPLES {
            return Err(Error::TooFewReplicates {
                found: sample_count,
                min: MIN_SAMPLES,
            });
        }
        let m = self.moments();
        let declared = [0.0, m.variance, m.third_moment, m.fourth];
        let mut rng = stream.rng();
        // running sums of ξ^k and ξ^{2k}
        let mut s = [0.0f64; 4];
        let mut s2 = [0.0f64; 4];
        for _ in 0..sample_count {
            let x = self.sample(&mut rng);
            let mut p = 1.0;
            for k in 0..4 {
                p *= x;
                s[k] += p;
                s2[k] += p * p;
            }
        }
        let n = sample_count as f64;
        let rows = core::array::from_fn(|k| {
            let mean = s[k] / n;
            let var = (s2[k] / n - mean * mean).max(0.0) * n / (n - 1.0);
            let std_error = sqrt(var / n);
            MomentRow {
                order: k as u32 + 1,
                declared: declared[k],
                empirical: mean,
                std_error,
                flagged: abs(mean - declared[k]) > 5.0 * std_error,
            }
        });
        Ok(MomentCheck {
            samples: sample_count,
            rows,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentRow {
    pub order: u32,
    pub declared: f64,
    pub empirical: f64,
    pub std_error: f64,
    /// More than five standard errors from the declared value.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentCheck {
    pub samples: usize,
    pub rows: [MomentRow; 4],
}

impl MomentCheck {
    pub fn any_flagged(&self) -> bool {
        self.rows.iter().any(|r| r.flagged)
    }
}

impl fmt::Display for CoordinateDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.law {
            Law::Rademacher => f.write_str("rademacher"),
            Law::Gaussian => f.write_str("gaussian"),
            Law::UniformSymmetric => f.write_str("uniform"),
            Law::Laplace => f.write_str("laplace"),
            Law::LaplaceNormalized => f.write_str("laplace-normalized"),
            Law::ScaledRademacher { bound } => write!(f, "scaled-rademacher:{bound}"),
            Law::TwoPoint { p } => write!(f, "two-point:{p}"),
        }
    }
}

impl FromStr for CoordinateDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, param) = match s.split_once(':') {
            Some((n, p)) => (n.trim(), Some(p.trim())),
            None => (s.trim(), None),
        };
        let number = |p: Option<&str>| -> Result<f64> {
            let p = p.ok_or_else(|| invalid("distribution", format!("`{name}` needs a parameter")))?;
            p.parse::<f64>()
                .map_err(|_| invalid("distribution", format!("bad parameter `{p}`")))
        };
        let law = match name {
            "rademacher" => Law::Rademacher,
            "gaussian" => Law::Gaussian,
            "uniform" => Law::UniformSymmetric,
            "laplace" => Law::Laplace,
            "laplace-normalized" => Law::LaplaceNormalized,
            "scaled-rademacher" => Law::ScaledRademacher {
                bound: number(param)?,
            },
            "two-point" => Law::TwoPoint { p: number(param)? },
            other => {
                let msg: String = format!("unknown distribution `{other}`");
                return Err(invalid("distribution", msg));
            }
        };
        if param.is_some() && !matches!(law, Law::ScaledRademacher { .. } | Law::TwoPoint { .. }) {
            return Err(invalid("distribution", format!("`{name}` takes no parameter")));
        }
        Self::new(law)
    }
}

/// Standard normal quantile: Acklam's rational approximation followed by one
/// Halley step against `erfc`, which brings it to full double precision.
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;
    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let mut x = if p < P_LOW {
        tail(sqrt(-2.0 * log(p)))
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail(sqrt(-2.0 * log(1.0 - p)))
    };
    // Halley refinement
    let e = 0.5 * libm::erfc(-x / SQRT_2) - p;
    let u = e * sqrt(2.0 * PI) * exp(x * x / 2.0);
    x -= u / (1.0 + x * u / 2.0);
    x
}
