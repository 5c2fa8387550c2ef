//! Log-partition soft-max `F_β(x) = β^{-1} log Σ_t e^{β⟨x,t⟩}`, its Gibbs
//! measures, coordinate derivatives and the log-Laplace transform of a
//! weighted index set.
//!
//! Every exponential sum subtracts its maximum first, so `β` in the thousands
//! neither overflows nor loses the sandwich `max ≤ F_β ≤ max + log|T|/β`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::index_set::IndexSet;
use crate::math::{abs, exp, log, log1p, powi};

/// Gibbs weights below this are flushed to zero before renormalizing.
pub const WEIGHT_FLUSH: f64 = 1e-300;

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(invalid("beta", "must be positive and finite"));
    }
    Ok(())
}

fn check_x(set: &IndexSet, x: &[f64]) -> Result<()> {
    set.check_dim(x)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(invalid("x", "must be finite"));
    }
    Ok(())
}

fn check_coord(set: &IndexSet, i: usize) -> Result<()> {
    if i >= set.dim() {
        return Err(Error::IndexOutOfRange {
            index: i,
            dim: set.dim(),
        });
    }
    Ok(())
}

/// `F_β(x)`.
pub fn log_partition(set: &IndexSet, beta: f64, x: &[f64]) -> Result<f64> {
    check_beta(beta)?;
    check_x(set, x)?;
    Ok(log_partition_unchecked(set, beta, x))
}

pub(crate) fn log_partition_unchecked(set: &IndexSet, beta: f64, x: &[f64]) -> f64 {
    let (max, excess) = max_and_excess(&set.inner_products(x), beta);
    max + log1p(excess) / beta
}

/// `(max s, Σ_t e^{β(s_t − max)} − 1)`, the second without forming the sum
/// `1 + …` so that small gaps keep their relative precision.
fn max_and_excess(s: &[f64], beta: f64) -> (f64, f64) {
    let (arg, max) = s
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(ia, a), (i, v)| if v > a { (i, v) } else { (ia, a) });
    let excess = s
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != arg)
        .map(|(_, &v)| exp(beta * (v - max)))
        .sum();
    (max, excess)
}

/// `F_β(x) − max_t⟨x,t⟩` and its certified bound `log|T| / β`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichGap {
    pub gap: f64,
    pub certified_bound: f64,
}

pub fn sandwich_gap(set: &IndexSet, beta: f64, x: &[f64]) -> Result<SandwichGap> {
    check_beta(beta)?;
    check_x(set, x)?;
    let (_, excess) = max_and_excess(&set.inner_products(x), beta);
    Ok(SandwichGap {
        gap: log1p(excess) / beta,
        certified_bound: set.log_cardinality() / beta,
    })
}

/// Gibbs measure `μ_x(t) ∝ e^{β⟨x,t⟩}` on an index set.
#[derive(Debug, Clone)]
pub struct GibbsMeasure<'a> {
    base: &'a IndexSet,
    beta: f64,
    location: Vec<f64>,
    weights: Vec<f64>,
}

impl<'a> GibbsMeasure<'a> {
    pub fn new(set: &'a IndexSet, beta: f64, x: &[f64]) -> Result<Self> {
        check_beta(beta)?;
        check_x(set, x)?;
        let s = set.inner_products(x);
        let logits: Vec<f64> = s.iter().map(|v| beta * v).collect();
        Ok(Self {
            base: set,
            beta,
            location: x.to_vec(),
            weights: normalized_weights(&logits),
        })
    }

    pub fn base(&self) -> &'a IndexSet {
        self.base
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn location(&self) -> &[f64] {
        &self.location
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `E_μ[ℓ_i^k]`, or `E_μ[|ℓ_i|^k]` when `absolute`.
    pub fn moment(&self, i: usize, k: u32, absolute: bool) -> Result<f64> {
        check_coord(self.base, i)?;
        if k == 0 {
            return Err(invalid("k", "must be at least 1"));
        }
        Ok(weighted_moment(self.base, &self.weights, i, k, absolute))
    }

    /// Mean of `ℓ_i` and central moments of orders 2, 3, 4.
    pub fn central_moments(&self, i: usize) -> Result<[f64; 4]> {
        check_coord(self.base, i)?;
        Ok(central_moments(self.base, &self.weights, i))
    }
}

/// Softmax of `logits` in probability space, flushing tiny weights.
pub(crate) fn normalized_weights(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = logits.iter().map(|&l| exp(l - max)).collect();
    let total: f64 = w.iter().sum();
    let mut kept = 0.0;
    for v in &mut w {
        *v /= total;
        if *v < WEIGHT_FLUSH {
            *v = 0.0;
        }
        kept += *v;
    }
    if kept != 1.0 {
        for v in &mut w {
            *v /= kept;
        }
    }
    w
}

fn weighted_moment(set: &IndexSet, weights: &[f64], i: usize, k: u32, absolute: bool) -> f64 {
    let mut acc = 0.0;
    set.for_each_point(|idx, p| {
        let w = weights[idx];
        if w != 0.0 {
            let v = if absolute { abs(p[i]) } else { p[i] };
            acc += w * powi(v, k);
        }
    });
    acc
}

/// `[mean, E(ℓ−m)^2, E(ℓ−m)^3, E(ℓ−m)^4]` under `weights`, two-pass.
fn central_moments(set: &IndexSet, weights: &[f64], i: usize) -> [f64; 4] {
    let mean = weighted_moment(set, weights, i, 1, false);
    let mut c = [mean, 0.0, 0.0, 0.0];
    set.for_each_point(|idx, p| {
        let w = weights[idx];
        if w != 0.0 {
            let d = p[i] - mean;
            let d2 = d * d;
            c[1] += w * d2;
            c[2] += w * d2 * d;
            c[3] += w * d2 * d2;
        }
    });
    c
}

/// `∇F_β(x)`: the vector of Gibbs first moments.
pub fn gradient(set: &IndexSet, beta: f64, x: &[f64]) -> Result<Vec<f64>> {
    let mu = GibbsMeasure::new(set, beta, x)?;
    let mut g = vec![0.0; set.dim()];
    set.for_each_point(|idx, p| {
        let w = mu.weights[idx];
        if w != 0.0 {
            for (gi, pi) in g.iter_mut().zip(p) {
                *gi += w * pi;
            }
        }
    });
    Ok(g)
}

/// `∂_i^{(order)} F_β(x)` for `order ∈ {1, 2, 3, 4}`, from the central-moment
/// formulas: `β Var`, `β² E(ℓ−m)³`, `β³ (E(ℓ−m)⁴ − 3 Var²)`.
pub fn analytic_partial(set: &IndexSet, beta: f64, x: &[f64], i: usize, order: usize) -> Result<f64> {
    if !(1..=4).contains(&order) {
        return Err(Error::UnsupportedOrder(order));
    }
    let mu = GibbsMeasure::new(set, beta, x)?;
    let c = mu.central_moments(i)?;
    Ok(partial_from_central(beta, &c, order))
}

fn partial_from_central(beta: f64, c: &[f64; 4], order: usize) -> f64 {
    match order {
        1 => c[0],
        2 => beta * c[1],
        3 => beta * beta * c[2],
        4 => beta * beta * beta * (c[3] - 3.0 * c[1] * c[1]),
        _ => unreachable!(),
    }
}

/// Central finite difference of `f` at `x0` of the given order, with
/// fourth-order accurate stencils.
pub fn central_difference(mut f: impl FnMut(f64) -> f64, x0: f64, h: f64, order: usize) -> Result<f64> {
    let mut v = |k: f64| f(x0 + k * h);
    Ok(match order {
        1 => (-v(2.0) + 8.0 * v(1.0) - 8.0 * v(-1.0) + v(-2.0)) / (12.0 * h),
        2 => (-v(2.0) + 16.0 * v(1.0) - 30.0 * v(0.0) + 16.0 * v(-1.0) - v(-2.0)) / (12.0 * h * h),
        3 => {
            (-v(3.0) + 8.0 * v(2.0) - 13.0 * v(1.0) + 13.0 * v(-1.0) - 8.0 * v(-2.0) + v(-3.0))
                / (8.0 * h * h * h)
        }
        4 => {
            (-v(3.0) + 12.0 * v(2.0) - 39.0 * v(1.0) + 56.0 * v(0.0) - 39.0 * v(-1.0)
                + 12.0 * v(-2.0)
                - v(-3.0))
                / (6.0 * h * h * h * h)
        }
        other => return Err(Error::UnsupportedOrder(other)),
    })
}

/// Step for an order-`k` difference of `F_β` along coordinate `i`: `F_β`
/// varies on the length scale `1/(β max_t|t_i|)`, and the fourth-order
/// stencils balance truncation against rounding at `ε^{1/(k+4)}` of it.
pub fn difference_step(beta: f64, max_abs_coord: f64, order: usize) -> f64 {
    let scale = if max_abs_coord > 0.0 {
        1.0 / (beta * max_abs_coord)
    } else {
        1.0
    };
    libm::pow(f64::EPSILON, 1.0 / (order as f64 + 4.0)) * scale
}

/// Outcome of the third/fourth-derivative bound checks at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeBoundReport {
    /// `∂_i^{(k)} F_β(x)` for `k = 2, 3, 4`.
    pub analytic: [f64; 3],
    /// Finite-difference estimates of the same.
    pub finite_difference: [f64; 3],
    /// `|fd − analytic| / max(|analytic|, β^{k−1} max_t|t_i|^k)`.
    pub relative_error: [f64; 3],
    /// `6 β² E_μ|ℓ_i|³` and `26 β³ E_μ ℓ_i⁴`.
    pub moment_bounds: [f64; 2],
    /// `6 β² max|t_i|³` and `26 β³ max|t_i|⁴`.
    pub max_bounds: [f64; 2],
    pub third_within_moment_bound: bool,
    pub fourth_within_moment_bound: bool,
    pub third_within_max_bound: bool,
    pub fourth_within_max_bound: bool,
}

impl DerivativeBoundReport {
    pub fn bounds_hold(&self) -> bool {
        self.third_within_moment_bound
            && self.fourth_within_moment_bound
            && self.third_within_max_bound
            && self.fourth_within_max_bound
    }

    pub fn finite_differences_agree(&self, tol: f64) -> bool {
        self.relative_error.iter().all(|e| *e <= tol)
    }
}

pub fn derivative_bound_check(
    set: &IndexSet,
    beta: f64,
    x: &[f64],
    i: usize,
) -> Result<DerivativeBoundReport> {
    let mu = GibbsMeasure::new(set, beta, x)?;
    let c = mu.central_moments(i)?;
    let analytic = [
        partial_from_central(beta, &c, 2),
        partial_from_central(beta, &c, 3),
        partial_from_central(beta, &c, 4),
    ];
    let abs3 = mu.moment(i, 3, true)?;
    let m4 = mu.moment(i, 4, false)?;
    let mut max_abs = 0.0f64;
    set.for_each_point(|_, p| max_abs = max_abs.max(abs(p[i])));
    let b2 = beta * beta;
    let b3 = b2 * beta;
    let moment_bounds = [6.0 * b2 * abs3, 26.0 * b3 * m4];
    let max_bounds = [6.0 * b2 * powi(max_abs, 3), 26.0 * b3 * powi(max_abs, 4)];
    let slack = |b: f64| b * (1.0 + 1e-12) + 1e-300;

    let mut y = x.to_vec();
    let xi = x[i];
    let mut finite_difference = [0.0; 3];
    let mut relative_error = [0.0; 3];
    for (slot, order) in (2..=4).enumerate() {
        let h = difference_step(beta, max_abs, order);
        let fd = central_difference(
            |v| {
                y[i] = v;
                log_partition_unchecked(set, beta, &y)
            },
            xi,
            h,
            order,
        )?;
        let scale = libm::pow(beta, order as f64 - 1.0) * powi(max_abs, order as u32);
        finite_difference[slot] = fd;
        relative_error[slot] = if scale == 0.0 && fd == analytic[slot] {
            0.0
        } else {
            abs(fd - analytic[slot]) / abs(analytic[slot]).max(scale)
        };
    }

    Ok(DerivativeBoundReport {
        analytic,
        finite_difference,
        relative_error,
        moment_bounds,
        max_bounds,
        third_within_moment_bound: abs(analytic[1]) <= slack(moment_bounds[0]),
        fourth_within_moment_bound: abs(analytic[2]) <= slack(moment_bounds[1]),
        third_within_max_bound: abs(analytic[1]) <= slack(max_bounds[0]),
        fourth_within_max_bound: abs(analytic[2]) <= slack(max_bounds[1]),
    })
}

/// A probability measure carried by the points of an index set.
#[derive(Debug, Clone)]
pub struct WeightedMeasure<'a> {
    base: &'a IndexSet,
    weights: Vec<f64>,
}

impl<'a> WeightedMeasure<'a> {
    pub fn new(set: &'a IndexSet, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != set.cardinality() {
            return Err(Error::DimensionMismatch {
                expected: set.cardinality(),
                found: weights.len(),
            });
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(invalid("weights", "must be nonnegative and finite"));
        }
        let total: f64 = weights.iter().sum();
        if abs(total - 1.0) > 1e-12 {
            return Err(invalid("weights", "must sum to one"));
        }
        Ok(Self { base: set, weights })
    }

    pub fn uniform(set: &'a IndexSet) -> Self {
        let w = 1.0 / set.cardinality() as f64;
        Self {
            base: set,
            weights: vec![w; set.cardinality()],
        }
    }

    pub fn base(&self) -> &'a IndexSet {
        self.base
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Logits `log w_t + ⟨ξ, t⟩`, `-inf` on atoms of zero mass.
    fn logits(&self, xi: &[f64]) -> Vec<f64> {
        self.base
            .inner_products(xi)
            .into_iter()
            .zip(&self.weights)
            .map(|(s, &w)| if w > 0.0 { log(w) + s } else { f64::NEG_INFINITY })
            .collect()
    }

    /// `Λ_μ(ξ) = log ∫ e^{⟨ξ,t⟩} dμ(t)`.
    pub fn log_laplace(&self, xi: &[f64]) -> Result<f64> {
        check_x(self.base, xi)?;
        Ok(crate::math::log_sum_exp(&self.logits(xi)))
    }

    /// The tilted measure `dμ_ξ/dμ ∝ e^{⟨ξ,t⟩}`.
    pub fn tilted_weights(&self, xi: &[f64]) -> Result<Vec<f64>> {
        check_x(self.base, xi)?;
        Ok(normalized_weights(&self.logits(xi)))
    }

    /// `∂^k Λ_μ / ∂ξ_i^k` for `k ∈ {1,…,4}`, the `β = 1` central-moment formulas
    /// under the tilted measure.
    pub fn log_laplace_partial(&self, xi: &[f64], i: usize, order: usize) -> Result<f64> {
        if !(1..=4).contains(&order) {
            return Err(Error::UnsupportedOrder(order));
        }
        check_coord(self.base, i)?;
        let w = self.tilted_weights(xi)?;
        Ok(partial_from_central(1.0, &central_moments(self.base, &w, i), order))
    }

    /// Third/fourth derivative bounds of `Λ_μ`: `6 E_{μ_ξ}|ℓ_i|³ ≤ 6 max|t_i|³`
    /// and `26 E_{μ_ξ} ℓ_i⁴ ≤ 26 max|t_i|⁴`.
    pub fn log_laplace_bound_check(&self, xi: &[f64], i: usize) -> Result<bool> {
        check_coord(self.base, i)?;
        let w = self.tilted_weights(xi)?;
        let c = central_moments(self.base, &w, i);
        let d3 = partial_from_central(1.0, &c, 3);
        let d4 = partial_from_central(1.0, &c, 4);
        let abs3 = weighted_moment(self.base, &w, i, 3, true);
        let m4 = weighted_moment(self.base, &w, i, 4, false);
        let mut max_abs = 0.0f64;
        self.base.for_each_point(|_, p| max_abs = max_abs.max(abs(p[i])));
        let le = |a: f64, b: f64| abs(a) <= b * (1.0 + 1e-12) + 1e-300;
        Ok(le(d3, 6.0 * abs3)
            && le(6.0 * abs3, 6.0 * powi(max_abs, 3))
            && le(d4, 26.0 * m4)
            && le(26.0 * m4, 26.0 * powi(max_abs, 4)))
    }
}

/// Log-moment Lipschitz checks for `ψ(z) = log E_{μ_z}[f]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzReport {
    /// `|log ψ(x) − log ψ(x')|` with `f = ℓ_i⁴`.
    pub log_ratio: f64,
    /// `2 β R_∞ |x_i − x_i'|`.
    pub coordinate_bound: f64,
    pub coordinate_ok: bool,
    /// Generalized form, `β` folded into the locations:
    /// `sup_t⟨t, β(x−x')⟩ − inf_t⟨t, β(x−x')⟩`.
    pub oscillation_bound: f64,
    pub oscillation_ok: bool,
    /// `sup_t |⟨t, β(x−x')⟩|`, reported for comparison. Not asserted: it can
    /// fail by up to a factor two.
    pub unit_constant_bound: f64,
    pub unit_constant_ok: bool,
}

impl LipschitzReport {
    pub fn passed(&self) -> bool {
        self.coordinate_ok && self.oscillation_ok
    }
}

/// `log E_{μ_x}[f]` with `μ_x` the Gibbs measure at `(β, x)`; `-inf` when `f`
/// vanishes on the support.
pub fn log_gibbs_expectation(
    set: &IndexSet,
    beta: f64,
    x: &[f64],
    f: impl Fn(&[f64]) -> f64,
) -> Result<f64> {
    check_beta(beta)?;
    check_x(set, x)?;
    // log Σ_t f(t) e^{β⟨x,t⟩} − log Σ_t e^{β⟨x,t⟩}, both stabilized
    let s = set.inner_products(x);
    let mut num = Vec::with_capacity(s.len());
    let mut bad = None;
    set.for_each_point(|idx, p| {
        let v = f(p);
        if !(v >= 0.0) || !v.is_finite() {
            bad = Some(idx);
        }
        num.push(if v > 0.0 { log(v) + beta * s[idx] } else { f64::NEG_INFINITY });
    });
    if bad.is_some() {
        return Err(invalid("f", "must be nonnegative and finite on T"));
    }
    let den: Vec<f64> = s.iter().map(|v| beta * v).collect();
    Ok(crate::math::log_sum_exp(&num) - crate::math::log_sum_exp(&den))
}

/// Compare `ψ(x) = log E_{μ_x}[f]` at two arbitrary locations against the
/// oscillation bound `sup⟨t,β(x−y)⟩ − inf⟨t,β(x−y)⟩`. Returns
/// `(|ψ(x) − ψ(y)|, bound, holds)`.
pub fn general_log_moment_check(
    set: &IndexSet,
    beta: f64,
    x: &[f64],
    y: &[f64],
    f: impl Fn(&[f64]) -> f64,
) -> Result<(f64, f64, bool)> {
    let px = log_gibbs_expectation(set, beta, x, &f)?;
    let py = log_gibbs_expectation(set, beta, y, &f)?;
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| beta * (a - b)).collect();
    let s = set.inner_products(&d);
    let hi = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = s.iter().copied().fold(f64::INFINITY, f64::min);
    let bound = hi - lo;
    let diff = if px == f64::NEG_INFINITY && py == f64::NEG_INFINITY {
        0.0
    } else {
        abs(px - py)
    };
    let tol = 1e-12 * (abs(px) + abs(py) + bound) + 1e-14;
    Ok((diff, bound, diff <= bound + tol))
}

/// Lipschitz log-moment check for `x, x'` differing only in coordinate `i`.
pub fn lipschitz_log_moment_check(
    set: &IndexSet,
    beta: f64,
    x: &[f64],
    x_prime: &[f64],
    i: usize,
) -> Result<LipschitzReport> {
    check_coord(set, i)?;
    check_x(set, x_prime)?;
    if x
        .iter()
        .zip(x_prime)
        .enumerate()
        .any(|(j, (a, b))| j != i && a != b)
    {
        return Err(invalid("x_prime", "must differ from x only in coordinate i"));
    }
    let f = |t: &[f64]| powi(t[i], 4);
    let (log_ratio, oscillation_bound, oscillation_ok) =
        general_log_moment_check(set, beta, x, x_prime, f)?;
    let rinf = set.profile().rinf;
    let delta = abs(x[i] - x_prime[i]);
    let coordinate_bound = 2.0 * beta * rinf * delta;
    let d: Vec<f64> = x.iter().zip(x_prime).map(|(a, b)| beta * (a - b)).collect();
    let unit_constant_bound = set
        .inner_products(&d)
        .into_iter()
        .fold(0.0f64, |m, v| m.max(abs(v)));
    let tol = 1e-12 * (log_ratio + coordinate_bound) + 1e-14;
    Ok(LipschitzReport {
        log_ratio,
        coordinate_bound,
        coordinate_ok: log_ratio <= coordinate_bound + tol,
        oscillation_bound,
        oscillation_ok,
        unit_constant_bound,
        unit_constant_ok: log_ratio <= unit_constant_bound + tol,
    })
}
