//! Ornstein–Uhlenbeck semigroup `P_t f(x) = E f(e^{−t}x + √(1−e^{−2t}) G)`,
//! its generator `L = Δ − ⟨x, ∇⟩`, the potential `ℙf = ∫_0^∞ (P_t f − E f(G)) dt`,
//! and the Taylor-remainder Stein representations of `E[Lf(ξ)]`.
//!
//! Polynomials are handled exactly: `P_t` of a monomial expands into Gaussian
//! moments, and every time integral becomes a polynomial integral that the
//! Gauss–Legendre rule reproduces. Other functions go through Monte Carlo
//! with common random numbers across quadrature nodes.
//!
//! Time integrals use `u = e^{−t}` followed by `u = 1 − v²`; the second step
//! removes the square-root singularity of `√(1−u²)` at `u = 1`.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::distribution::{CoordinateDistribution, RandomStream};
use crate::error::{invalid, Error, Result};
use crate::gibbs;
use crate::index_set::IndexSet;
use crate::math::{abs, binomial, exp, expm1, gaussian_mean_monomial, log, powi, sqrt};
use crate::mc;
use crate::quadrature::GaussLegendre;
use crate::stats::Summary;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionKind {
    Polynomial,
    Softmax,
    Custom,
}

/// A `C⁴` function `ℝⁿ → ℝ` with coordinate partials up to order four.
pub trait SmoothFunction: Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    /// `∂_i^{(order)} f(x)`.
    fn partial(&self, x: &[f64], i: usize, order: usize) -> Result<f64>;
    fn kind(&self) -> FunctionKind;
    /// `E f(G)` when known in closed form.
    fn gaussian_mean(&self) -> Option<f64> {
        None
    }
    fn lipschitz(&self) -> Option<f64> {
        None
    }
    /// `sup_x |∂_i^{(order)} f(x)|` over all coordinates, when known.
    fn derivative_bound(&self, _order: usize) -> Option<f64> {
        None
    }
    fn as_polynomial(&self) -> Option<&Polynomial> {
        None
    }
}

/// Sparse polynomial: a list of `(coefficient, exponent vector)` terms.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    dim: usize,
    terms: Vec<(f64, Vec<u32>)>,
}

impl Polynomial {
    pub fn new(dim: usize, terms: Vec<(f64, Vec<u32>)>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dim", "must be at least 1"));
        }
        for (c, e) in &terms {
            if e.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: e.len(),
                });
            }
            if !c.is_finite() {
                return Err(invalid("coefficient", "must be finite"));
            }
        }
        Ok(Self { dim, terms }.pruned())
    }

    pub fn constant(dim: usize, c: f64) -> Result<Self> {
        Self::new(dim, vec![(c, vec![0; dim])])
    }

    /// `⟨a, x⟩`.
    pub fn linear(a: &[f64]) -> Result<Self> {
        let dim = a.len();
        let terms = a
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let mut e = vec![0; dim];
                e[i] = 1;
                (c, e)
            })
            .collect();
        Self::new(dim, terms)
    }

    /// `x_i^k`.
    pub fn coordinate_power(dim: usize, i: usize, k: u32) -> Result<Self> {
        if i >= dim {
            return Err(Error::IndexOutOfRange { index: i, dim });
        }
        let mut e = vec![0; dim];
        e[i] = k;
        Self::new(dim, vec![(1.0, e)])
    }

    fn pruned(mut self) -> Self {
        self.terms.retain(|(c, _)| *c != 0.0);
        self
    }

    pub fn terms(&self) -> &[(f64, Vec<u32>)] {
        &self.terms
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .map(|(_, e)| e.iter().sum())
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(c, e)| c * e.iter().zip(x).map(|(&k, &v)| powi(v, k)).product::<f64>())
            .sum()
    }

    /// `∂_i^{(k)}` as a polynomial.
    pub fn derivative(&self, i: usize, k: u32) -> Polynomial {
        let terms = self
            .terms
            .iter()
            .filter(|(_, e)| e[i] >= k)
            .map(|(c, e)| {
                let falling: f64 = (0..k).map(|j| (e[i] - j) as f64).product();
                let mut e2 = e.clone();
                e2[i] -= k;
                (c * falling, e2)
            })
            .collect();
        Polynomial {
            dim: self.dim,
            terms,
        }
        .pruned()
    }

    /// `Lf = Σ_i ∂_i² f − x_i ∂_i f`, again a polynomial.
    pub fn generator(&self) -> Polynomial {
        let mut terms = Vec::new();
        for (c, e) in &self.terms {
            let total: u32 = e.iter().sum();
            if total > 0 {
                terms.push((-c * total as f64, e.clone()));
            }
            for i in 0..self.dim {
                if e[i] >= 2 {
                    let mut e2 = e.clone();
                    e2[i] -= 2;
                    terms.push((c * (e[i] * (e[i] - 1)) as f64, e2));
                }
            }
        }
        Polynomial {
            dim: self.dim,
            terms,
        }
        .pruned()
    }

    pub fn expectation_gaussian(&self) -> f64 {
        self.terms
            .iter()
            .map(|(c, e)| c * gaussian_mean_monomial(e))
            .sum()
    }

    /// `P_t f(x)` in closed form, with `a = e^{−t}`, `b = √(1 − e^{−2t})`.
    pub fn ou_exact(&self, a: f64, b: f64, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(c, e)| {
                c * e
                    .iter()
                    .zip(x)
                    .map(|(&k, &xj)| {
                        // E (a x_j + b g)^k
                        let mut s = 0.0;
                        let mut j = 0;
                        while j <= k {
                            s += binomial(k as u64, j as u64) as f64
                                * powi(a * xj, k - j)
                                * powi(b, j)
                                * crate::math::gaussian_moment(j);
                            j += 2;
                        }
                        s
                    })
                    .product::<f64>()
            })
            .sum()
    }
}

impl SmoothFunction for Polynomial {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x)
    }

    fn partial(&self, x: &[f64], i: usize, order: usize) -> Result<f64> {
        if i >= self.dim {
            return Err(Error::IndexOutOfRange {
                index: i,
                dim: self.dim,
            });
        }
        Ok(self.derivative(i, order as u32).eval(x))
    }

    fn kind(&self) -> FunctionKind {
        FunctionKind::Polynomial
    }

    fn gaussian_mean(&self) -> Option<f64> {
        Some(self.expectation_gaussian())
    }

    fn lipschitz(&self) -> Option<f64> {
        match self.degree() {
            0 => Some(0.0),
            1 => {
                let mut a = vec![0.0; self.dim];
                for (c, e) in &self.terms {
                    if let Some(i) = e.iter().position(|&k| k == 1) {
                        a[i] += c;
                    }
                }
                Some(sqrt(a.iter().map(|v| v * v).sum()))
            }
            _ => None,
        }
    }

    fn as_polynomial(&self) -> Option<&Polynomial> {
        Some(self)
    }
}

/// `F_β` over an index set, with partials from the Gibbs central moments.
#[derive(Debug, Clone)]
pub struct SoftmaxFunction<'a> {
    set: &'a IndexSet,
    beta: f64,
    r2: f64,
    rinf: f64,
}

impl<'a> SoftmaxFunction<'a> {
    pub fn new(set: &'a IndexSet, beta: f64) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(invalid("beta", "must be positive and finite"));
        }
        let p = set.profile();
        Ok(Self {
            set,
            beta,
            r2: p.r2,
            rinf: p.rinf,
        })
    }

    pub fn set(&self) -> &'a IndexSet {
        self.set
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

impl SmoothFunction for SoftmaxFunction<'_> {
    fn dim(&self) -> usize {
        self.set.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        gibbs::log_partition_unchecked(self.set, self.beta, x)
    }

    fn partial(&self, x: &[f64], i: usize, order: usize) -> Result<f64> {
        gibbs::analytic_partial(self.set, self.beta, x, i, order)
    }

    fn kind(&self) -> FunctionKind {
        FunctionKind::Softmax
    }

    fn lipschitz(&self) -> Option<f64> {
        Some(self.r2)
    }

    fn derivative_bound(&self, order: usize) -> Option<f64> {
        let (b, r) = (self.beta, self.rinf);
        match order {
            0 => None,
            1 => Some(r),
            2 => Some(b * r * r),
            3 => Some(6.0 * b * b * powi(r, 3)),
            4 => Some(26.0 * b * b * b * powi(r, 4)),
            _ => None,
        }
    }
}

type ValueFn = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type PartialFn = Box<dyn Fn(&[f64], usize, usize) -> Option<f64> + Send + Sync>;

/// A function given by closures.
pub struct CustomFunction {
    dim: usize,
    value: ValueFn,
    partial: Option<PartialFn>,
    gaussian_mean: Option<f64>,
    lipschitz: Option<f64>,
}

impl CustomFunction {
    pub fn new(dim: usize, value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            dim,
            value: Box::new(value),
            partial: None,
            gaussian_mean: None,
            lipschitz: None,
        }
    }

    /// Partials; the closure returns `None` for orders it does not supply.
    pub fn with_partials(
        mut self,
        partial: impl Fn(&[f64], usize, usize) -> Option<f64> + Send + Sync + 'static,
    ) -> Self {
        self.partial = Some(Box::new(partial));
        self
    }

    pub fn with_gaussian_mean(mut self, mean: f64) -> Self {
        self.gaussian_mean = Some(mean);
        self
    }

    pub fn with_lipschitz(mut self, lip: f64) -> Self {
        self.lipschitz = Some(lip);
        self
    }
}

impl core::fmt::Debug for CustomFunction {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("CustomFunction")
            .field("dim", &self.dim)
            .field("gaussian_mean", &self.gaussian_mean)
            .field("lipschitz", &self.lipschitz)
            .finish_non_exhaustive()
    }
}

impl SmoothFunction for CustomFunction {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    fn partial(&self, x: &[f64], i: usize, order: usize) -> Result<f64> {
        self.partial
            .as_ref()
            .and_then(|p| p(x, i, order))
            .ok_or(Error::MissingPartial(order))
    }

    fn kind(&self) -> FunctionKind {
        FunctionKind::Custom
    }

    fn gaussian_mean(&self) -> Option<f64> {
        self.gaussian_mean
    }

    fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorEstimate {
    pub value: f64,
    pub std_error: f64,
    pub mc_samples: usize,
    pub quadrature_nodes: usize,
    /// `∞` when the whole half-line is integrated exactly.
    pub truncation_t_max: f64,
    /// Bound on the neglected `[t_max, ∞)` contribution.
    pub tail_bound: f64,
}

impl OperatorEstimate {
    fn exact(value: f64, nodes: usize) -> Self {
        Self {
            value,
            std_error: 0.0,
            mc_samples: 0,
            quadrature_nodes: nodes,
            truncation_t_max: f64::INFINITY,
            tail_bound: 0.0,
        }
    }
}

/// Monte-Carlo and quadrature budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuBudget {
    pub samples: usize,
    pub time_nodes: usize,
    pub s_nodes: usize,
    /// Target for the truncation tail of time integrals.
    pub tail_tolerance: f64,
    /// Largest admissible truncation time.
    pub max_t: f64,
    /// Use Monte Carlo even where an exact evaluation exists.
    pub force_monte_carlo: bool,
    /// Largest product-measure support enumerated exactly.
    pub max_configurations: usize,
}

impl Default for OuBudget {
    fn default() -> Self {
        Self {
            samples: 20_000,
            time_nodes: 64,
            s_nodes: 32,
            tail_tolerance: 1e-6,
            max_t: 60.0,
            force_monte_carlo: false,
            max_configurations: 1 << 20,
        }
    }
}

fn check_point(f: &dyn SmoothFunction, x: &[f64]) -> Result<()> {
    if x.len() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            found: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(invalid("x", "must be finite"));
    }
    Ok(())
}

fn gaussian_scratch(n: usize) -> impl Fn() -> (Vec<f64>, Vec<f64>) + Sync {
    move || (vec![0.0; n], vec![0.0; n])
}

/// `(P_t f)(x)`.
pub fn ou_apply(
    f: &dyn SmoothFunction,
    t: f64,
    x: &[f64],
    budget: &OuBudget,
    stream: &RandomStream,
) -> Result<OperatorEstimate> {
    check_point(f, x)?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(invalid("t", "must be nonnegative and finite"));
    }
    if t == 0.0 {
        return Ok(OperatorEstimate::exact(f.value(x), 0));
    }
    let a = exp(-t);
    let b = sqrt(-expm1(-2.0 * t));
    if let (Some(p), false) = (f.as_polynomial(), budget.force_monte_carlo) {
        return Ok(OperatorEstimate::exact(p.ou_exact(a, b, x), 0));
    }
    if budget.samples < 2 {
        return Err(Error::TooFewReplicates {
            found: budget.samples,
            min: 2,
        });
    }
    let gauss = CoordinateDistribution::gaussian();
    let samples = mc::replicate(budget.samples, stream, gaussian_scratch(x.len()), |(g, y), rng| {
        gauss.fill(rng, g);
        for ((yj, gj), xj) in y.iter_mut().zip(g.iter()).zip(x) {
            *yj = a * xj + b * gj;
        }
        f.value(y)
    });
    let s = Summary::of(&samples);
    Ok(OperatorEstimate {
        value: s.mean,
        std_error: s.std_error,
        mc_samples: budget.samples,
        quadrature_nodes: 0,
        truncation_t_max: t,
        tail_bound: 0.0,
    })
}

/// `(Lf)(x) = Σ_i ∂_i² f(x) − x_i ∂_i f(x)`.
pub fn generator_apply(f: &dyn SmoothFunction, x: &[f64]) -> Result<f64> {
    check_point(f, x)?;
    let mut acc = 0.0;
    for (i, &xi) in x.iter().enumerate() {
        acc += f.partial(x, i, 2)? - xi * f.partial(x, i, 1)?;
    }
    Ok(acc)
}

/// Quadrature nodes `(u, weight)` for `∫_{u0}^1 h(u) du` after `u = 1 − v²`.
fn time_nodes(rule: &GaussLegendre, u0: f64) -> Vec<(f64, f64)> {
    let vmax = sqrt(1.0 - u0);
    rule.on_interval(0.0, vmax)
        .into_iter()
        .map(|(v, w)| (1.0 - v * v, 2.0 * v * w))
        .collect()
}

/// Monte-Carlo `∫_{u0}^1 weight(u) · f(u x + √(1−u²) G) du`, one Gaussian draw
/// per replicate shared by every node.
fn mc_time_integral(
    x: &[f64],
    nodes: &[(f64, f64)],
    samples: usize,
    stream: &RandomStream,
    integrand: impl Fn(&[f64], &[f64], f64) -> f64 + Sync,
) -> Summary {
    let gauss = CoordinateDistribution::gaussian();
    let q = mc::replicate(samples, stream, gaussian_scratch(x.len()), |(g, y), rng| {
        gauss.fill(rng, g);
        let mut acc = 0.0;
        for &(u, w) in nodes {
            let s = sqrt((1.0 - u) * (1.0 + u));
            for ((yj, gj), xj) in y.iter_mut().zip(g.iter()).zip(x) {
                *yj = u * xj + s * gj;
            }
            acc += w * integrand(y, g, u);
        }
        acc
    });
    Summary::of(&q)
}

fn euclidean(x: &[f64]) -> f64 {
    sqrt(x.iter().map(|v| v * v).sum())
}

/// `(ℙf)(x) = ∫_0^∞ (P_t f(x) − E f(G)) dt`.
pub fn ou_potential(
    f: &dyn SmoothFunction,
    x: &[f64],
    budget: &OuBudget,
    stream: &RandomStream,
) -> Result<OperatorEstimate> {
    check_point(f, x)?;
    let rule = GaussLegendre::new(budget.time_nodes)?;
    if let (Some(p), false) = (f.as_polynomial(), budget.force_monte_carlo) {
        let mean = p.expectation_gaussian();
        let value = time_nodes(&rule, 0.0)
            .into_iter()
            .map(|(u, w)| w * (p.ou_exact(u, sqrt((1.0 - u) * (1.0 + u)), x) - mean) / u)
            .sum();
        return Ok(OperatorEstimate::exact(value, budget.time_nodes));
    }
    let lip = f.lipschitz().ok_or_else(|| {
        Error::ToleranceUnreachable(format!("no Lipschitz constant for the {:?} tail bound", f.kind()))
    })?;
    // |P_t f(x) − E f(G)| ≤ e^{−t} Lip (‖x‖ + √n)
    let scale = lip * (euclidean(x) + sqrt(x.len() as f64));
    let t_max = if scale > 0.0 {
        log(scale / budget.tail_tolerance).max(1.0)
    } else {
        1.0
    };
    if t_max > budget.max_t {
        return Err(Error::ToleranceUnreachable(format!(
            "t_max = {t_max} exceeds {}",
            budget.max_t
        )));
    }
    check_samples(budget)?;
    let nodes = time_nodes(&rule, exp(-t_max));
    let s = mc_time_integral(x, &nodes, budget.samples, stream, |y, g, u| {
        (f.value(y) - f.value(g)) / u
    });
    Ok(OperatorEstimate {
        value: s.mean,
        std_error: s.std_error,
        mc_samples: budget.samples,
        quadrature_nodes: budget.time_nodes,
        truncation_t_max: t_max,
        tail_bound: scale * exp(-t_max),
    })
}

fn check_samples(budget: &OuBudget) -> Result<()> {
    if budget.samples < 2 {
        return Err(Error::TooFewReplicates {
            found: budget.samples,
            min: 2,
        });
    }
    Ok(())
}

/// `∂_i^{(k)} ℙf(x) = ∫_0^∞ e^{−kt} P_t(∂_i^{(k)} f)(x) dt` for `1 ≤ k ≤ 4`;
/// `k = 0` is [`ou_potential`].
pub fn potential_partial(
    f: &dyn SmoothFunction,
    x: &[f64],
    i: usize,
    k: usize,
    budget: &OuBudget,
    stream: &RandomStream,
) -> Result<OperatorEstimate> {
    if k == 0 {
        return ou_potential(f, x, budget, stream);
    }
    if k > 4 {
        return Err(Error::UnsupportedOrder(k));
    }
    check_point(f, x)?;
    if i >= x.len() {
        return Err(Error::IndexOutOfRange {
            index: i,
            dim: x.len(),
        });
    }
    let rule = GaussLegendre::new(budget.time_nodes)?;
    let kk = k as u32;
    if let (Some(p), false) = (f.as_polynomial(), budget.force_monte_carlo) {
        let d = p.derivative(i, kk);
        let value = time_nodes(&rule, 0.0)
            .into_iter()
            .map(|(u, w)| w * powi(u, kk - 1) * d.ou_exact(u, sqrt((1.0 - u) * (1.0 + u)), x))
            .sum();
        return Ok(OperatorEstimate::exact(value, budget.time_nodes));
    }
    let bound = f.derivative_bound(k).ok_or_else(|| {
        Error::ToleranceUnreachable(format!("no bound on order-{k} partials for the tail"))
    })?;
    // tail ∫_0^{u0} u^{k−1} |P(∂^k f)| du ≤ bound · u0^k / k
    let t_max = if bound > 0.0 {
        (log(bound / (k as f64 * budget.tail_tolerance)) / k as f64).max(1.0)
    } else {
        1.0
    };
    if t_max > budget.max_t {
        return Err(Error::ToleranceUnreachable(format!(
            "t_max = {t_max} exceeds {}",
            budget.max_t
        )));
    }
    check_samples(budget)?;
    let nodes = time_nodes(&rule, exp(-t_max));
    let s = mc_time_integral(x, &nodes, budget.samples, stream, |y, _, u| {
        // partials of the built-in kinds do not fail once dimensions check out
        powi(u, kk - 1) * f.partial(y, i, k).unwrap_or(f64::NAN)
    });
    if !s.mean.is_finite() {
        return Err(Error::MissingPartial(k));
    }
    Ok(OperatorEstimate {
        value: s.mean,
        std_error: s.std_error,
        mc_samples: budget.samples,
        quadrature_nodes: budget.time_nodes,
        truncation_t_max: t_max,
        tail_bound: bound * exp(-(k as f64) * t_max) / k as f64,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoissonReport {
    /// `f(x) − E f(G)`.
    pub centered: f64,
    /// `−Lℙf(x)`.
    pub minus_l_potential: f64,
    /// `−ℙLf(x)`; polynomials only.
    pub minus_potential_l: Option<f64>,
    pub std_error: f64,
    pub tail_bound: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// `f(x) − E f(G) = −Lℙf(x) = −ℙLf(x)`.
pub fn poisson_identity_check(
    f: &dyn SmoothFunction,
    x: &[f64],
    budget: &OuBudget,
    stream: &RandomStream,
) -> Result<PoissonReport> {
    check_point(f, x)?;
    let mut var = 0.0;
    let mut tail = 0.0;
    let mean = match f.gaussian_mean() {
        Some(m) => m,
        None => {
            check_samples(budget)?;
            let gauss = CoordinateDistribution::gaussian();
            let v = mc::replicate(
                budget.samples,
                &stream.tagged("mean"),
                || vec![0.0; x.len()],
                |g, rng| {
                    gauss.fill(rng, g);
                    f.value(g)
                },
            );
            let s = Summary::of(&v);
            var += s.std_error * s.std_error;
            s.mean
        }
    };
    let centered = f.value(x) - mean;
    let mut lp = 0.0;
    for (i, &xi) in x.iter().enumerate() {
        let d2 = potential_partial(f, x, i, 2, budget, &stream.child(2 * i as u64))?;
        let d1 = potential_partial(f, x, i, 1, budget, &stream.child(2 * i as u64 + 1))?;
        lp += d2.value - xi * d1.value;
        var += d2.std_error * d2.std_error + xi * xi * d1.std_error * d1.std_error;
        tail += d2.tail_bound + abs(xi) * d1.tail_bound;
    }
    let minus_potential_l = match (f.as_polynomial(), budget.force_monte_carlo) {
        (Some(p), false) => {
            let lf = p.generator();
            Some(-ou_potential(&lf, x, budget, stream)?.value)
        }
        _ => None,
    };
    let std_error = sqrt(var);
    let scale = abs(centered).max(1.0);
    let tolerance = 4.0 * std_error + tail + 1e-10 * scale;
    let ok = |v: f64| abs(centered - v) <= tolerance;
    let passed = ok(-lp) && minus_potential_l.is_none_or(ok);
    Ok(PoissonReport {
        centered,
        minus_l_potential: -lp,
        minus_potential_l,
        std_error,
        tail_bound: tail,
        tolerance,
        passed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SteinVariant {
    /// Third-order remainders; needs mean zero and unit variance.
    Third,
    /// Fourth-order remainders; additionally needs `E ξ³ = 0`.
    Fourth,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteinReport {
    pub variant: SteinVariant,
    /// `E[Lf(ξ)]`.
    pub lhs: f64,
    /// First remainder sum minus second.
    pub rhs: f64,
    pub first_term: f64,
    pub second_term: f64,
    /// Zero for exhaustive evaluation.
    pub std_error: f64,
    pub exact: bool,
    pub configurations: usize,
    pub discrepancy: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Per-configuration `(Lf(ξ), first, second)`.
fn stein_terms(
    f: &dyn SmoothFunction,
    xi: &[f64],
    variant: SteinVariant,
    s_rule: &[(f64, f64)],
    z: &mut [f64],
) -> Result<(f64, f64, f64)> {
    let lhs = generator_apply(f, xi)?;
    let (mut first, mut second) = (0.0, 0.0);
    z.copy_from_slice(xi);
    for (i, &v) in xi.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        let (mut a, mut b) = (0.0, 0.0);
        for &(s, w) in s_rule {
            z[i] = s * v;
            match variant {
                SteinVariant::Third => {
                    let d = f.partial(z, i, 3)?;
                    a += w * d;
                    b += w * (1.0 - s) * d;
                }
                SteinVariant::Fourth => {
                    let d = f.partial(z, i, 4)?;
                    a += w * (1.0 - s) * d;
                    b += w * (1.0 - s) * (1.0 - s) * d;
                }
            }
        }
        z[i] = v;
        match variant {
            SteinVariant::Third => {
                first += v * a;
                second += powi(v, 3) * b;
            }
            SteinVariant::Fourth => {
                first += v * v * a;
                second += 0.5 * powi(v, 4) * b;
            }
        }
    }
    Ok((lhs, first, second))
}

/// Check the Taylor-remainder representation of `E[Lf(ξ)]` for i.i.d.
/// coordinates `ξ_i ~ dist`. Third order:
/// `Σ_i E[ξ_i ∫_0^1 ∂_i³f(ξ^{(i)} + sξ_i e_i) ds] − Σ_i E[ξ_i³ ∫_0^1 (1−s) ∂_i³f(…) ds]`;
/// fourth order:
/// `Σ_i E[ξ_i² ∫_0^1 (1−s) ∂_i⁴f(…) ds] − Σ_i E[ξ_i⁴/2 ∫_0^1 (1−s)² ∂_i⁴f(…) ds]`,
/// where `ξ^{(i)}` is `ξ` with coordinate `i` set to zero.
///
/// Discrete laws whose product support fits the budget are enumerated, which
/// makes the check a finite computation.
pub fn stein_representation_check(
    f: &dyn SmoothFunction,
    dist: &CoordinateDistribution,
    variant: SteinVariant,
    budget: &OuBudget,
    stream: &RandomStream,
) -> Result<SteinReport> {
    let m = dist.moments();
    if abs(m.variance - 1.0) > 1e-12 {
        return Err(Error::MomentHypothesis("coordinates must have unit variance"));
    }
    if variant == SteinVariant::Fourth && abs(m.third_moment) > 1e-12 {
        return Err(Error::MomentHypothesis(
            "coordinates must have vanishing third moment",
        ));
    }
    let n = f.dim();
    let s_rule = GaussLegendre::new(budget.s_nodes)?.on_interval(0.0, 1.0);
    let support = dist
        .discrete_support()
        .filter(|_| !budget.force_monte_carlo)
        .filter(|atoms| {
            libm::pow(atoms.len() as f64, n as f64) <= budget.max_configurations as f64
        });

    let (lhs, first, second, std_error, configurations, exact) = if let Some(atoms) = support {
        let mut digits = vec![0usize; n];
        let mut xi = vec![0.0; n];
        let mut z = vec![0.0; n];
        let (mut l, mut a, mut b) = (0.0, 0.0, 0.0);
        let mut count = 0usize;
        loop {
            let mut p = 1.0;
            for (x, &d) in xi.iter_mut().zip(&digits) {
                *x = atoms[d].0;
                p *= atoms[d].1;
            }
            let (tl, ta, tb) = stein_terms(f, &xi, variant, &s_rule, &mut z)?;
            l += p * tl;
            a += p * ta;
            b += p * tb;
            count += 1;
            let mut j = 0;
            while j < n {
                digits[j] += 1;
                if digits[j] < atoms.len() {
                    break;
                }
                digits[j] = 0;
                j += 1;
            }
            if j == n {
                break;
            }
        }
        (l, a, b, 0.0, count, true)
    } else {
        check_samples(budget)?;
        let rows = mc::replicate(
            budget.samples,
            stream,
            || (vec![0.0; n], vec![0.0; n]),
            |(xi, z), rng| {
                dist.fill(rng, xi);
                stein_terms(f, xi, variant, &s_rule, z)
            },
        );
        let rows: Vec<(f64, f64, f64)> = rows.into_iter().collect::<Result<_>>()?;
        let col = |k: usize| -> Vec<f64> {
            rows.iter()
                .map(|r| match k {
                    0 => r.0,
                    1 => r.1,
                    2 => r.2,
                    _ => r.0 - (r.1 - r.2),
                })
                .collect()
        };
        let diff = Summary::of(&col(3));
        (
            Summary::of(&col(0)).mean,
            Summary::of(&col(1)).mean,
            Summary::of(&col(2)).mean,
            diff.std_error,
            budget.samples,
            false,
        )
    };
    let rhs = first - second;
    let discrepancy = abs(lhs - rhs);
    let scale = abs(lhs).max(abs(first)).max(abs(second)).max(1.0);
    let tolerance = if exact {
        1e-10 * scale
    } else {
        4.0 * std_error + 1e-10 * scale
    };
    Ok(SteinReport {
        variant,
        lhs,
        rhs,
        first_term: first,
        second_term: second,
        std_error,
        exact,
        configurations,
        discrepancy,
        tolerance,
        passed: discrepancy <= tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::Law;

    fn x1_squared(n: usize) -> Polynomial {
        Polynomial::coordinate_power(n, 0, 2).unwrap()
    }

    fn stream() -> RandomStream {
        RandomStream::new(0x5eed, 7)
    }

    #[test]
    fn polynomial_algebra() {
        let p = Polynomial::new(2, vec![(3.0, vec![2, 1]), (-1.0, vec![0, 0])]).unwrap();
        assert_eq!(p.eval(&[2.0, 5.0]), 59.0);
        assert_eq!(p.derivative(0, 2).eval(&[2.0, 5.0]), 30.0);
        assert_eq!(p.derivative(1, 2).terms().len(), 0);
        assert_eq!(p.degree(), 3);
        let q = Polynomial::coordinate_power(1, 0, 4).unwrap();
        assert_eq!(q.expectation_gaussian(), 3.0);
        // L x^4 = 12 x^2 − 4 x^4
        assert_eq!(q.generator().eval(&[2.0]), 48.0 - 64.0);
    }

    #[test]
    fn ou_apply_at_zero_time_is_exact() {
        let f = x1_squared(2);
        let e = ou_apply(&f, 0.0, &[1.5, -2.0], &OuBudget::default(), &stream()).unwrap();
        assert_eq!(e.value, 2.25);
        assert_eq!(e.std_error, 0.0);
        assert!(ou_apply(&f, -1.0, &[0.0, 0.0], &OuBudget::default(), &stream()).is_err());
    }

    #[test]
    fn ou_apply_closed_forms() {
        let f = x1_squared(1);
        let t: f64 = 0.7;
        let want = exp(-2.0 * t) * 4.0 + 1.0 - exp(-2.0 * t);
        let e = ou_apply(&f, t, &[2.0], &OuBudget::default(), &stream()).unwrap();
        assert!((e.value - want).abs() < 1e-14);

        let mc = OuBudget {
            force_monte_carlo: true,
            samples: 40_000,
            ..OuBudget::default()
        };
        let e = ou_apply(&f, t, &[2.0], &mc, &stream()).unwrap();
        assert!((e.value - want).abs() <= 4.0 * e.std_error, "{e:?} vs {want}");

        let lin = Polynomial::linear(&[1.0, -2.0]).unwrap();
        let x = [0.3, 0.9];
        let e = ou_apply(&lin, t, &x, &mc, &stream()).unwrap();
        let want = exp(-t) * (0.3 - 1.8);
        assert!((e.value - want).abs() <= 4.0 * e.std_error);
    }

    #[test]
    fn generator_examples() {
        let f = x1_squared(2);
        assert_eq!(generator_apply(&f, &[3.0, 1.0]).unwrap(), 2.0 - 18.0);
        let lin = Polynomial::linear(&[2.0, -1.0]).unwrap();
        assert_eq!(generator_apply(&lin, &[1.0, 4.0]).unwrap(), -(2.0 - 4.0));
        let t = IndexSet::explicit(&[[1.0], [-1.0]]).unwrap();
        let sm = SoftmaxFunction::new(&t, 2.5).unwrap();
        assert!((generator_apply(&sm, &[0.0]).unwrap() - 2.5).abs() < 1e-14);
        let c = CustomFunction::new(1, |x| x[0]);
        assert_eq!(generator_apply(&c, &[1.0]), Err(Error::MissingPartial(2)));
    }

    #[test]
    fn potential_closed_forms() {
        let b = OuBudget::default();
        let f = x1_squared(1);
        for x in [0.0, 1.0, 2.5] {
            let p = ou_potential(&f, &[x], &b, &stream()).unwrap();
            assert!((p.value - (x * x - 1.0) / 2.0).abs() < 1e-13, "{p:?}");
        }
        let lin = Polynomial::linear(&[0.5, 2.0]).unwrap();
        let p = ou_potential(&lin, &[1.0, -1.0], &b, &stream()).unwrap();
        assert!((p.value - (0.5 - 2.0)).abs() < 1e-13);
        let c = Polynomial::constant(2, 4.0).unwrap();
        assert_eq!(ou_potential(&c, &[1.0, 2.0], &b, &stream()).unwrap().value, 0.0);
    }

    #[test]
    fn potential_partial_closed_forms() {
        let b = OuBudget::default();
        let f = x1_squared(1);
        let p = potential_partial(&f, &[0.4], 0, 2, &b, &stream()).unwrap();
        assert!((p.value - 1.0).abs() < 1e-13);
        let lin = Polynomial::linear(&[0.5, 2.0]).unwrap();
        let p = potential_partial(&lin, &[1.0, -1.0], 1, 1, &b, &stream()).unwrap();
        assert!((p.value - 2.0).abs() < 1e-13);
        let c = Polynomial::constant(1, 4.0).unwrap();
        for k in 1..=4 {
            assert_eq!(potential_partial(&c, &[0.3], 0, k, &b, &stream()).unwrap().value, 0.0);
        }
    }

    #[test]
    fn poisson_identity_closed_forms() {
        let b = OuBudget::default();
        let r = poisson_identity_check(&x1_squared(1), &[2.0], &b, &stream()).unwrap();
        assert!((r.centered - 3.0).abs() < 1e-15);
        assert!((r.minus_l_potential - 3.0).abs() < 1e-12);
        assert!(r.passed);
        let lin = Polynomial::linear(&[1.5, -0.5]).unwrap();
        let r = poisson_identity_check(&lin, &[2.0, 1.0], &b, &stream()).unwrap();
        assert!((r.minus_l_potential - 2.5).abs() < 1e-12 && r.passed);
        let c = Polynomial::constant(1, 3.0).unwrap();
        let r = poisson_identity_check(&c, &[2.0], &b, &stream()).unwrap();
        assert_eq!((r.centered, r.minus_l_potential), (0.0, 0.0));
    }

    #[test]
    fn stein_quartic_single_coordinate() {
        let f = Polynomial::coordinate_power(1, 0, 4).unwrap();
        let d = CoordinateDistribution::rademacher();
        let b = OuBudget::default();
        let r = stein_representation_check(&f, &d, SteinVariant::Fourth, &b, &stream()).unwrap();
        assert!(r.exact);
        assert!((r.lhs - 8.0).abs() < 1e-12);
        assert!((r.first_term - 12.0).abs() < 1e-12);
        assert!((r.second_term - 4.0).abs() < 1e-12);
        assert!(r.passed);
        let r = stein_representation_check(&f, &d, SteinVariant::Third, &b, &stream()).unwrap();
        assert!((r.rhs - 8.0).abs() < 1e-12 && r.passed);
    }

    #[test]
    fn stein_linear_is_zero() {
        let f = Polynomial::linear(&[1.0, -3.0, 0.5]).unwrap();
        let d = CoordinateDistribution::rademacher();
        for v in [SteinVariant::Third, SteinVariant::Fourth] {
            let r = stein_representation_check(&f, &d, v, &OuBudget::default(), &stream()).unwrap();
            assert!(r.lhs.abs() < 1e-15 && r.rhs == 0.0);
        }
    }

    #[test]
    fn stein_softmax_exhaustive() {
        let t = IndexSet::explicit(&[[0.5, -1.0], [1.0, 0.3], [-0.7, 0.8]]).unwrap();
        let f = SoftmaxFunction::new(&t, 1.3).unwrap();
        let d = CoordinateDistribution::rademacher();
        let r = stein_representation_check(&f, &d, SteinVariant::Fourth, &OuBudget::default(), &stream())
            .unwrap();
        assert_eq!(r.configurations, 4);
        assert!(r.discrepancy < 1e-8, "{r:?}");
    }

    #[test]
    fn stein_refuses_bad_moments() {
        let f = Polynomial::coordinate_power(1, 0, 4).unwrap();
        let b = OuBudget::default();
        let lap = CoordinateDistribution::laplace();
        assert!(matches!(
            stein_representation_check(&f, &lap, SteinVariant::Third, &b, &stream()),
            Err(Error::MomentHypothesis(_))
        ));
        let skew = CoordinateDistribution::new(Law::TwoPoint { p: 0.2 }).unwrap();
        assert!(matches!(
            stein_representation_check(&f, &skew, SteinVariant::Fourth, &b, &stream()),
            Err(Error::MomentHypothesis(_))
        ));
        let r = stein_representation_check(&f, &skew, SteinVariant::Third, &b, &stream()).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn stein_monte_carlo_gaussian() {
        let f = Polynomial::new(2, vec![(1.0, vec![2, 2]), (0.5, vec![3, 0])]).unwrap();
        let b = OuBudget {
            samples: 20_000,
            ..OuBudget::default()
        };
        let r = stein_representation_check(
            &f,
            &CoordinateDistribution::gaussian(),
            SteinVariant::Fourth,
            &b,
            &stream(),
        )
        .unwrap();
        assert!(!r.exact && r.passed, "{r:?}");
    }

    #[test]
    fn softmax_potential_monte_carlo_matches_partials() {
        let t = IndexSet::explicit(&[[1.0], [-1.0], [0.2]]).unwrap();
        let f = SoftmaxFunction::new(&t, 1.0).unwrap();
        let b = OuBudget {
            samples: 4_000,
            tail_tolerance: 1e-4,
            ..OuBudget::default()
        };
        let r = poisson_identity_check(&f, &[0.5], &b, &stream()).unwrap();
        assert!(r.passed, "{r:?}");
    }
}
