//! Comparison-bound curves and the experiments built on them.
//!
//! Every curve is reported with its universal constant set to one; the
//! experiments assert boundedness or trends of empirical/bound ratios, never an
//! absolute constant.

use alloc::format;
use alloc::vec::Vec;

use crate::distribution::{CoordinateDistribution, Moments, RandomStream};
use crate::error::{invalid, Error, Result};
use crate::estimator::{
    complexity, estimate_complexity, exact_rademacher_complexity, sample_suprema,
    EstimateOptions, SupremumEstimate,
};
use crate::index_set::{BasisMode, GeometricProfile, IndexSet};
use crate::math::{abs, binomial, log, pow, sqrt};
use crate::stats::{spearman, spread};

/// Spearman threshold for calling a noisy sequence increasing.
pub const TREND_RHO: f64 = 0.8;
/// Largest admissible `max/min` of a column that should be stable.
pub const LAPLACE_STABLE_SPREAD: f64 = 2.0;
/// Largest admissible `max/min` of the scaled universality gap.
pub const SK_SPREAD_LIMIT: f64 = 3.0;
/// Band for the normalized Gaussian tensor ground state.
pub const TENSOR_BAND: (f64, f64) = (0.2, 1.5);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundProfile {
    pub u: f64,
    /// `u^{1/2} R_2`
    pub trivial_k: f64,
    /// `u^{3/4} √(R_2 R_∞)`
    pub talagrand_t: f64,
    /// `u^{3/4} R_4`
    pub s1: f64,
    /// `u R_∞`
    pub s2: f64,
    /// `M max(s1, s2)`; needs an almost-sure bound `M`.
    pub s_combined: Option<f64>,
    /// `M max(R_3 u^{2/3}, R_∞ u)`.
    pub r3_variant: Option<f64>,
    /// `σ_3 ‖(e_i)‖_{ℓ3(T)} u^{2/3}`
    pub corollary_l3: f64,
    /// `σ_4 ‖(e_i)‖_{ℓ4(T)} u^{3/4}`
    pub corollary_l4: f64,
}

impl BoundProfile {
    pub fn s_combined(&self) -> Result<f64> {
        self.s_combined.ok_or(Error::MissingBound)
    }

    pub fn r3_variant(&self) -> Result<f64> {
        self.r3_variant.ok_or(Error::MissingBound)
    }
}

pub fn bound_profile(profile: &GeometricProfile, u: f64, moments: &Moments) -> Result<BoundProfile> {
    if !(u > 0.0) || !u.is_finite() {
        return Err(invalid("u", "must be positive and finite"));
    }
    let u34 = pow(u, 0.75);
    let u23 = pow(u, 2.0 / 3.0);
    let s1 = u34 * profile.r4;
    let s2 = u * profile.rinf;
    let m = moments.bound;
    Ok(BoundProfile {
        u,
        trivial_k: sqrt(u) * profile.r2,
        talagrand_t: u34 * sqrt(profile.r2 * profile.rinf),
        s1,
        s2,
        s_combined: m.map(|m| m * s1.max(s2)),
        r3_variant: m.map(|m| m * (profile.r3 * u23).max(s2)),
        corollary_l3: moments.sigma3() * profile.col3 * u23,
        corollary_l4: moments.sigma4() * profile.col4 * u34,
    })
}

/// `β = (log|T|)^{1/4} / (σ_4 ‖(e_i)‖_{ℓ4(T)})`.
pub fn beta_fourth_moment(profile: &GeometricProfile, moments: &Moments) -> Result<f64> {
    let d = moments.sigma4() * profile.col4;
    if !(d > 0.0) || !(profile.log_card > 0.0) {
        return Err(invalid("beta", "needs |T| ≥ 2 and a nondegenerate profile"));
    }
    Ok(pow(profile.log_card, 0.25) / d)
}

/// `β = min{(M R_∞)^{−1}, (log|T|)^{1/4} / (M R_4)}`.
pub fn beta_bounded(profile: &GeometricProfile, m: f64) -> Result<f64> {
    if !(m > 0.0) || !(profile.rinf > 0.0) || !(profile.log_card > 0.0) {
        return Err(invalid("beta", "needs M > 0, |T| ≥ 2 and R_∞ > 0"));
    }
    Ok((1.0 / (m * profile.rinf)).min(pow(profile.log_card, 0.25) / (m * profile.r4)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Marker {
    Grid,
    U1,
    U2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseRow {
    pub u: f64,
    pub k: f64,
    pub t: f64,
    pub s1: f64,
    pub s2: f64,
    /// `max(s1, s2)`: `s1` up to `u_1`, `s2` beyond.
    pub s: f64,
    /// `M s(u)`.
    pub m_s: f64,
    pub in_window: bool,
    pub marker: Marker,
}

/// One row per grid point plus rows at `u_1` and `u_2`, ascending in `u`.
pub fn phase_curve_table(profile: &GeometricProfile, m: f64, grid: &[f64]) -> Result<Vec<PhaseRow>> {
    if grid.iter().any(|u| !(*u > 0.0) || !u.is_finite()) {
        return Err(invalid("grid", "entries must be positive and finite"));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("grid", "must be strictly ascending"));
    }
    if !(m > 0.0) || !m.is_finite() {
        return Err(invalid("M", "must be positive and finite"));
    }
    let mut points: Vec<(f64, Marker)> = grid.iter().map(|&u| (u, Marker::Grid)).collect();
    for (u, mk) in [(profile.u1, Marker::U1), (profile.u2, Marker::U2)] {
        if u > 0.0 && u.is_finite() {
            points.push((u, mk));
        }
    }
    points.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1 as u8).cmp(&(b.1 as u8))));
    Ok(points
        .into_iter()
        .map(|(u, marker)| {
            let u34 = pow(u, 0.75);
            let s1 = u34 * profile.r4;
            let s2 = u * profile.rinf;
            let s = s1.max(s2);
            PhaseRow {
                u,
                k: sqrt(u) * profile.r2,
                t: u34 * sqrt(profile.r2 * profile.rinf),
                s1,
                s2,
                s,
                m_s: m * s,
                in_window: profile.u1 <= u && u <= profile.u2,
                marker,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundRatios {
    pub trivial_k: f64,
    pub talagrand_t: f64,
    pub s_combined: Option<f64>,
    pub r3_variant: Option<f64>,
    pub corollary_l3: f64,
    pub corollary_l4: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    /// `E sup ⟨ξ, t⟩`.
    pub complexity: SupremumEstimate,
    /// `g(T)`.
    pub gaussian: SupremumEstimate,
    /// `c_ξ(T) − g(T)`; errors added in quadrature unless paired.
    pub gap: SupremumEstimate,
    pub profile: GeometricProfile,
    pub bounds: BoundProfile,
    /// `|gap| / bound`.
    pub ratios: BoundRatios,
    /// `R_∞ √(log|T|) ≤ R_2`
    pub flag_subgaussian: bool,
    /// `R_4 (log|T|)^{1/4} ≤ R_2` and `R_∞ (log|T|)^{1/2} ≤ R_2`
    pub flag_bounded: bool,
}

impl ComparisonReport {
    /// `|gap| ≤ k` propagated standard errors.
    pub fn gap_within(&self, k: f64) -> bool {
        abs(self.gap.mean) <= k * self.gap.std_error
    }
}

fn paired_difference(
    set: &IndexSet,
    dist: &CoordinateDistribution,
    replicates: usize,
    stream: &RandomStream,
) -> (SupremumEstimate, SupremumEstimate, SupremumEstimate) {
    let a = sample_suprema(set, dist, replicates, true, stream);
    let b = sample_suprema(set, &CoordinateDistribution::gaussian(), replicates, true, stream);
    let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    let seed = stream.master_seed;
    (
        SupremumEstimate::from_samples(&a, seed),
        SupremumEstimate::from_samples(&b, seed),
        SupremumEstimate::from_samples(&d, seed),
    )
}

/// `(c_ξ, g, c_ξ − g)`; the law is enumerated exactly when possible unless
/// `paired`, in which case both sides share uniforms.
fn gap_estimates(
    set: &IndexSet,
    dist: &CoordinateDistribution,
    options: &EstimateOptions,
    stream: &RandomStream,
) -> Result<(SupremumEstimate, SupremumEstimate, SupremumEstimate)> {
    if options.paired {
        if options.replicates < crate::estimator::MIN_REPLICATES {
            return Err(Error::TooFewReplicates {
                found: options.replicates,
                min: crate::estimator::MIN_REPLICATES,
            });
        }
        return Ok(paired_difference(set, dist, options.replicates, stream));
    }
    let c = complexity(set, dist, options, &stream.tagged("xi"))?;
    let g = estimate_complexity(
        set,
        &CoordinateDistribution::gaussian(),
        options,
        &stream.tagged("gaussian"),
    )?;
    let gap = c.difference(&g);
    Ok((c, g, gap))
}

pub fn error_report(
    set: &IndexSet,
    dist: &CoordinateDistribution,
    options: &EstimateOptions,
    stream: &RandomStream,
) -> Result<ComparisonReport> {
    let (c, g, gap) = gap_estimates(set, dist, options, stream)?;
    let profile = set.profile();
    let u = profile.log_card;
    // a singleton has u = 0; evaluate the curves at u = 0 directly
    let bounds = if u > 0.0 {
        bound_profile(&profile, u, &dist.moments())?
    } else {
        BoundProfile {
            u,
            trivial_k: 0.0,
            talagrand_t: 0.0,
            s1: 0.0,
            s2: 0.0,
            s_combined: dist.moments().bound.map(|_| 0.0),
            r3_variant: dist.moments().bound.map(|_| 0.0),
            corollary_l3: 0.0,
            corollary_l4: 0.0,
        }
    };
    let e = abs(gap.mean);
    let ratio = |b: f64| if b > 0.0 { e / b } else { f64::NAN };
    let ratios = BoundRatios {
        trivial_k: ratio(bounds.trivial_k),
        talagrand_t: ratio(bounds.talagrand_t),
        s_combined: bounds.s_combined.map(ratio),
        r3_variant: bounds.r3_variant.map(ratio),
        corollary_l3: ratio(bounds.corollary_l3),
        corollary_l4: ratio(bounds.corollary_l4),
    };
    Ok(ComparisonReport {
        complexity: c,
        gaussian: g,
        gap,
        profile,
        bounds,
        ratios,
        flag_subgaussian: profile.subgaussian_regime(u),
        flag_bounded: profile.bounded_regime(u),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SudakovReport {
    /// Minimum pairwise distance `a`.
    pub separation: f64,
    pub log_cardinality: f64,
    pub rademacher: SupremumEstimate,
    /// `R_∞ R_2 √(log|T|) / a²`
    pub hypothesis_ratio: f64,
    /// `r(T) / (a √(log|T|))`
    pub conclusion_ratio: f64,
    pub holds: bool,
}

/// Exact `r(T)` up to this dimension, Monte Carlo above.
pub const SUDAKOV_EXACT_DIM: usize = 16;

pub fn sudakov_check(
    set: &IndexSet,
    options: &EstimateOptions,
    stream: &RandomStream,
) -> Result<SudakovReport> {
    if set.cardinality() < 2 {
        return Err(invalid("T", "needs at least two points"));
    }
    let a = set
        .min_pairwise_distance()?
        .ok_or_else(|| invalid("T", "needs at least two points"))?;
    if !(a > 0.0) {
        return Err(invalid("T", "points must be distinct"));
    }
    let r = if set.dim() <= SUDAKOV_EXACT_DIM {
        exact_rademacher_complexity(set)?
    } else {
        estimate_complexity(set, &CoordinateDistribution::rademacher(), options, stream)?
    };
    let p = set.profile();
    let u = p.log_card;
    let hypothesis_ratio = p.rinf * p.r2 * sqrt(u) / (a * a);
    let conclusion_ratio = r.mean / (a * sqrt(u));
    Ok(SudakovReport {
        separation: a,
        log_cardinality: u,
        rademacher: r,
        hypothesis_ratio,
        conclusion_ratio,
        holds: hypothesis_ratio.is_finite() && conclusion_ratio.is_finite() && conclusion_ratio > 0.0,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceRow {
    pub n: usize,
    pub log_n: f64,
    pub laplace: SupremumEstimate,
    pub gaussian: SupremumEstimate,
    pub gap: SupremumEstimate,
    pub gap_over_log: f64,
    pub gap_over_log34: f64,
    /// `√(2 log n)`
    pub gaussian_max_bound: f64,
    pub gaussian_bound_ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceGrowth {
    pub rows: Vec<LaplaceRow>,
    /// Spearman correlation of `gap/(log n)^{3/4}` with `n`.
    pub rho_log34: f64,
    /// `max/min` of `gap/log n`.
    pub spread_log: f64,
    pub increasing: bool,
    pub stable: bool,
}

impl LaplaceGrowth {
    pub fn passed(&self) -> bool {
        self.increasing && self.stable && self.rows.iter().all(|r| r.gaussian_bound_ok)
    }
}

fn check_ascending(values: &[usize], name: &'static str) -> Result<()> {
    if values.is_empty() {
        return Err(invalid(name, "must not be empty"));
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid(name, "must be strictly ascending"));
    }
    Ok(())
}

/// Canonical basis under the literal Laplace law (variance 2) against the
/// Gaussian, across `n`.
pub fn laplace_growth_experiment(
    n_list: &[usize],
    options: &EstimateOptions,
    stream: &RandomStream,
) -> Result<LaplaceGrowth> {
    check_ascending(n_list, "n_list")?;
    if n_list[0] < 2 {
        return Err(invalid("n_list", "entries must be at least 2"));
    }
    let lap = CoordinateDistribution::laplace();
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let set = IndexSet::basis(n, BasisMode::Canonical)?;
        let cell = stream.tagged(&format!("laplace/n={n}"));
        let (c, g, gap) = gap_estimates(&set, &lap, options, &cell)?;
        let log_n = log(n as f64);
        let bound = sqrt(2.0 * log_n);
        rows.push(LaplaceRow {
            n,
            log_n,
            gaussian_bound_ok: g.mean <= bound + 4.0 * g.std_error,
            gap_over_log: gap.mean / log_n,
            gap_over_log34: gap.mean / pow(log_n, 0.75),
            laplace: c,
            gaussian: g,
            gap,
            gaussian_max_bound: bound,
        });
    }
    let ns: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let r34: Vec<f64> = rows.iter().map(|r| r.gap_over_log34).collect();
    let r1: Vec<f64> = rows.iter().map(|r| r.gap_over_log).collect();
    let rho_log34 = spearman(&ns, &r34);
    let spread_log = spread(&r1);
    Ok(LaplaceGrowth {
        rows,
        rho_log34,
        spread_log,
        increasing: rho_log34 >= TREND_RHO,
        stable: spread_log <= LAPLACE_STABLE_SPREAD,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniversalityRow {
    pub spins: usize,
    /// Normalized `E sup` under the chosen law.
    pub value: SupremumEstimate,
    pub gaussian: SupremumEstimate,
    pub gap: SupremumEstimate,
    /// `|gap| · N^{exponent}`
    pub scaled_gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkUniversality {
    pub rows: Vec<UniversalityRow>,
    /// `1/4` for symmetric laws, `1/6` when only the third moment is controlled.
    pub exponent: f64,
    pub spread: f64,
    pub bounded: bool,
}

fn require_unit_variance(dist: &CoordinateDistribution) -> Result<Moments> {
    let m = dist.moments();
    if abs(m.variance - 1.0) > 1e-12 {
        return Err(Error::MomentHypothesis("coordinates must have unit variance"));
    }
    Ok(m)
}

/// Normalized SK ground state `N^{−3/2} E sup_σ Σ_{i<j} ξ_ij σ_i σ_j` under
/// `dist` against Gaussian disorder.
pub fn sk_universality_experiment(
    spins: &[usize],
    dist: &CoordinateDistribution,
    options: &EstimateOptions,
    stream: &RandomStream,
) -> Result<SkUniversality> {
    check_ascending(spins, "N_list")?;
    let m = require_unit_variance(dist)?;
    let exponent = if abs(m.third_moment) > 1e-12 { 1.0 / 6.0 } else { 0.25 };
    let mut rows = Vec::with_capacity(spins.len());
    for &n in spins {
        let set = IndexSet::spin_quadratic(n, true)?;
        let cell = stream.tagged(&format!("sk/N={n}"));
        let (value, gaussian, gap) = gap_estimates(&set, dist, options, &cell)?;
        rows.push(UniversalityRow {
            spins: n,
            scaled_gap: abs(gap.mean) * pow(n as f64, exponent),
            value,
            gaussian,
            gap,
        });
    }
    let scaled: Vec<f64> = rows.iter().map(|r| r.scaled_gap).collect();
    let spread = spread(&scaled);
    Ok(SkUniversality {
        rows,
        exponent,
        spread,
        bounded: spread <= SK_SPREAD_LIMIT,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorRow {
    pub spins: usize,
    /// `E sup / (√binom(N,m) √N)` under Gaussian disorder.
    pub gaussian: SupremumEstimate,
    /// The same value under the `N^{3/2}` normalization; order two only.
    pub gaussian_sk_normalized: Option<f64>,
    pub value: SupremumEstimate,
    pub gap: SupremumEstimate,
    /// `(N / binom(N,m))^{1/4}`
    pub rate: f64,
    /// `|gap| / rate`
    pub gap_over_rate: f64,
    pub in_band: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorUniversality {
    pub order: usize,
    pub rows: Vec<TensorRow>,
    pub band: (f64, f64),
    pub all_in_band: bool,
}

pub fn tensor_universality_experiment(
    spins: &[usize],
    order: usize,
    dist: &CoordinateDistribution,
    options: &EstimateOptions,
    stream: &RandomStream,
) -> Result<TensorUniversality> {
    check_ascending(spins, "N_list")?;
    require_unit_variance(dist)?;
    let mut rows = Vec::with_capacity(spins.len());
    for &n in spins {
        let set = IndexSet::spin_tensor(n, order, true)?;
        let cell = stream.tagged(&format!("tensor/N={n}/m={order}"));
        let (value, gaussian, gap) = gap_estimates(&set, dist, options, &cell)?;
        let b = binomial(n as u64, order as u64) as f64;
        let nf = n as f64;
        let rate = pow(nf / b, 0.25);
        let sk = (order == 2).then(|| gaussian.mean * sqrt(b) * sqrt(nf) / pow(nf, 1.5));
        rows.push(TensorRow {
            spins: n,
            in_band: TENSOR_BAND.0 <= gaussian.mean && gaussian.mean <= TENSOR_BAND.1,
            gaussian_sk_normalized: sk,
            gap_over_rate: abs(gap.mean) / rate,
            gaussian,
            value,
            gap,
            rate,
        });
    }
    let all_in_band = rows.iter().all(|r| r.in_band);
    Ok(TensorUniversality {
        order,
        rows,
        band: TENSOR_BAND,
        all_in_band,
    })
}

/// `u`-grid of `count` points spaced evenly in `log u` over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0) || !(hi > lo) || count < 2 {
        return Err(invalid("grid", "needs 0 < lo < hi and at least two points"));
    }
    let (a, b) = (log(lo), log(hi));
    Ok((0..count)
        .map(|k| libm::exp(a + (b - a) * k as f64 / (count - 1) as f64))
        .collect())
}

/// Diagonal weights `d_j = j^{−α}`, `j = 1..n`.
pub fn power_weights(n: usize, alpha: f64) -> Vec<f64> {
    (1..=n).map(|j| pow(j as f64, -alpha)).collect()
}
