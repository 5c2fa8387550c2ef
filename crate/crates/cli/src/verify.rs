//! Randomized identity and inequality suites behind `verify`.
//!
//! Each suite returns one [`CheckRow`] per check. `max_error` is the largest
//! value of the check's error statistic over all instances: a discrepancy for
//! identities, and the normalized excess `lhs − rhs` for inequalities (so a
//! negative value is the smallest slack observed).

use rand::Rng;
use supremum_core::gibbs::{
    self, derivative_bound_check, general_log_moment_check, lipschitz_log_moment_check,
    log_partition, sandwich_gap,
};
use supremum_core::ou::{
    ou_apply, ou_potential, poisson_identity_check, potential_partial, stein_representation_check,
    CustomFunction, OuBudget, Polynomial, SoftmaxFunction, SteinVariant,
};
use supremum_core::distribution::StreamRng;
use supremum_core::{CoordinateDistribution, GibbsMeasure, IndexSet, RandomStream, WeightedMeasure};

use crate::error::{CliError, Result};
use crate::table::Table;

/// Relative slack on the soft-max inequalities.
pub const SANDWICH_SLACK: f64 = 1e-12;
/// Relative tolerance between analytic and finite-difference partials.
pub const FD_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub check: &'static str,
    pub instances: usize,
    pub failures: usize,
    pub max_error: f64,
}

impl CheckRow {
    fn new(check: &'static str) -> Self {
        Self {
            check,
            instances: 0,
            failures: 0,
            max_error: f64::NEG_INFINITY,
        }
    }

    fn record(&mut self, error: f64, ok: bool) {
        self.instances += 1;
        if !ok || error.is_nan() {
            self.failures += 1;
        }
        if error > self.max_error || error.is_nan() {
            self.max_error = error;
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0 && self.instances > 0
    }
}

pub fn table(name: &str, rows: &[CheckRow]) -> Table {
    let mut t = Table::new(name, &["check", "instances", "failures", "max_error", "passed"]);
    for r in rows {
        t.push(vec![
            r.check.into(),
            r.instances.into(),
            r.failures.into(),
            r.max_error.into(),
            r.passed().into(),
        ]);
    }
    t
}

fn uniform(rng: &mut StreamRng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn log_uniform(rng: &mut StreamRng, lo: f64, hi: f64) -> f64 {
    uniform(rng, lo.ln(), hi.ln()).exp()
}

/// A random soft-max instance `(T, β, x)` with `|T| ≤ max_card`, `dim ≤ max_dim`.
pub struct Instance {
    pub set: IndexSet,
    pub beta: f64,
    pub x: Vec<f64>,
}

pub fn random_instance(rng: &mut StreamRng, max_card: usize, max_dim: usize) -> Instance {
    let card = rng.random_range(1..=max_card);
    let dim = rng.random_range(1..=max_dim);
    let scale = log_uniform(rng, 0.2, 3.0);
    let points: Vec<Vec<f64>> = (0..card)
        .map(|_| (0..dim).map(|_| scale * uniform(rng, -1.0, 1.0)).collect())
        .collect();
    let set = IndexSet::explicit(&points).expect("random points are finite and rectangular");
    let beta = log_uniform(rng, 0.05, 10.0);
    let x = (0..dim).map(|_| uniform(rng, -3.0, 3.0)).collect();
    Instance { set, beta, x }
}

fn module(cell: &str) -> impl FnOnce(supremum_core::Error) -> CliError + '_ {
    move |source| CliError::Module {
        cell: cell.to_owned(),
        source,
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, a| m.max(a.abs()))
}

/// Sandwich, convexity, gradient and β-monotonicity of `F_β`, and the
/// derivative formulas against finite differences.
pub fn softmax_suite(trials: usize, stream: &RandomStream) -> Result<Vec<CheckRow>> {
    let mut sandwich = CheckRow::new("sandwich");
    let mut convexity = CheckRow::new("convexity");
    let mut grad_hull = CheckRow::new("gradient_in_hull");
    let mut grad_norm = CheckRow::new("gradient_norm_r2");
    let mut monotone = CheckRow::new("monotone_in_beta");
    let mut fd = CheckRow::new("finite_differences");
    let mut bounds = CheckRow::new("derivative_bounds");
    let mut rng = stream.tagged("softmax").rng();
    for k in 0..trials {
        let cell = format!("verify-softmax instance {k}");
        let Instance { set, beta, x } = random_instance(&mut rng, 64, 16);
        let m = supremum_core::estimator::exact_sup(&set, &x).map_err(module(&cell))?;
        let f = log_partition(&set, beta, &x).map_err(module(&cell))?;
        let g = sandwich_gap(&set, beta, &x).map_err(module(&cell))?;
        let scale = m.abs().max(g.certified_bound).max(1.0);
        let excess = (m - f).max(f - m - g.certified_bound) / scale;
        sandwich.record(excess, excess <= SANDWICH_SLACK);

        let y: Vec<f64> = x.iter().map(|_| uniform(&mut rng, -3.0, 3.0)).collect();
        let mid: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
        let fy = log_partition(&set, beta, &y).map_err(module(&cell))?;
        let fm = log_partition(&set, beta, &mid).map_err(module(&cell))?;
        let scale = f.abs().max(fy.abs()).max(1.0);
        let excess = (fm - 0.5 * (f + fy)) / scale;
        convexity.record(excess, excess <= SANDWICH_SLACK);

        let grad = gibbs::gradient(&set, beta, &x).map_err(module(&cell))?;
        let mut lo = vec![f64::INFINITY; set.dim()];
        let mut hi = vec![f64::NEG_INFINITY; set.dim()];
        set.for_each_point(|_, p| {
            for (j, &v) in p.iter().enumerate() {
                lo[j] = lo[j].min(v);
                hi[j] = hi[j].max(v);
            }
        });
        let profile = set.profile();
        let excess = grad
            .iter()
            .zip(lo.iter().zip(&hi))
            .map(|(g, (l, h))| (l - g).max(g - h))
            .fold(f64::NEG_INFINITY, f64::max)
            / profile.rinf.max(1e-300);
        grad_hull.record(excess, excess <= SANDWICH_SLACK);
        let norm = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
        let excess = (norm - profile.r2) / profile.r2.max(1e-300);
        grad_norm.record(excess, excess <= SANDWICH_SLACK);

        let f2 = log_partition(&set, 2.0 * beta, &x).map_err(module(&cell))?;
        let excess = (f2 - f) / f.abs().max(1.0);
        monotone.record(excess, excess <= SANDWICH_SLACK);

        let i = rng.random_range(0..set.dim());
        let r = derivative_bound_check(&set, beta, &x, i).map_err(module(&cell))?;
        let err = r.relative_error.iter().copied().fold(0.0, f64::max);
        fd.record(err, r.finite_differences_agree(FD_TOLERANCE));
        let ratio = [
            r.analytic[1].abs() / r.moment_bounds[0].max(1e-300),
            r.analytic[2].abs() / r.moment_bounds[1].max(1e-300),
        ];
        bounds.record(ratio[0].max(ratio[1]) - 1.0, r.bounds_hold());
    }
    Ok(vec![sandwich, convexity, grad_hull, grad_norm, monotone, fd, bounds])
}

/// Lipschitz log-moment bounds, the log-Laplace identities and Gibbs weights.
pub fn gibbs_suite(trials: usize, stream: &RandomStream) -> Result<Vec<CheckRow>> {
    let mut lip = CheckRow::new("lipschitz_coordinate");
    let mut osc = CheckRow::new("lipschitz_oscillation");
    let mut lambda = CheckRow::new("log_laplace_identity");
    let mut partials = CheckRow::new("log_laplace_partials");
    let mut lbounds = CheckRow::new("log_laplace_bounds");
    let mut weights = CheckRow::new("gibbs_weights");
    let mut rng = stream.tagged("gibbs").rng();
    for k in 0..trials {
        let cell = format!("verify-gibbs instance {k}");
        let Instance { set, beta, x } = random_instance(&mut rng, 32, 8);
        let i = rng.random_range(0..set.dim());

        let mut xp = x.clone();
        xp[i] = uniform(&mut rng, -3.0, 3.0);
        let r = lipschitz_log_moment_check(&set, beta, &x, &xp, i).map_err(module(&cell))?;
        let excess = if r.coordinate_bound > 0.0 {
            r.log_ratio / r.coordinate_bound - 1.0
        } else {
            r.log_ratio
        };
        lip.record(excess, r.passed());

        let y: Vec<f64> = x.iter().map(|_| uniform(&mut rng, -3.0, 3.0)).collect();
        let c: Vec<f64> = x.iter().map(|_| uniform(&mut rng, -1.0, 1.0)).collect();
        let pos = move |t: &[f64]| {
            let s: f64 = t.iter().zip(&c).map(|(a, b)| a * b).sum();
            1.0 + s * s
        };
        let (d, b, ok) = general_log_moment_check(&set, beta, &x, &y, pos).map_err(module(&cell))?;
        osc.record(d - b, ok);

        // Λ(βx) = β F_β(x) − log |T| for the uniform measure
        let uniform_measure = WeightedMeasure::uniform(&set);
        let bx: Vec<f64> = x.iter().map(|v| beta * v).collect();
        let l = uniform_measure.log_laplace(&bx).map_err(module(&cell))?;
        let f = log_partition(&set, beta, &x).map_err(module(&cell))?;
        let want = beta * f - set.log_cardinality();
        let err = (l - want).abs() / want.abs().max(1.0);
        lambda.record(err, err <= 1e-12);

        // ∂_i^k F_β(x) = β^{k−1} ∂_i^k Λ(βx)
        let mut worst = 0.0f64;
        let mut max_t = 0.0f64;
        set.for_each_point(|_, p| max_t = max_t.max(p[i].abs()));
        for order in 1..=4 {
            let a = gibbs::analytic_partial(&set, beta, &x, i, order).map_err(module(&cell))?;
            let b = beta.powi(order as i32 - 1)
                * uniform_measure
                    .log_laplace_partial(&bx, i, order)
                    .map_err(module(&cell))?;
            let s = (beta.powi(order as i32 - 1) * max_t.powi(order as i32)).max(1e-300);
            worst = worst.max((a - b).abs() / s);
        }
        partials.record(worst, worst <= 1e-10);

        let w: Vec<f64> = (0..set.cardinality()).map(|_| rng.random::<f64>() + 1e-3).collect();
        let total: f64 = w.iter().sum();
        let w = w.into_iter().map(|v| v / total).collect();
        let mu = WeightedMeasure::new(&set, w).map_err(module(&cell))?;
        let xi: Vec<f64> = x.iter().map(|_| uniform(&mut rng, -3.0, 3.0)).collect();
        let ok = mu.log_laplace_bound_check(&xi, i).map_err(module(&cell))?;
        lbounds.record(if ok { 0.0 } else { 1.0 }, ok);

        let g = GibbsMeasure::new(&set, beta, &x).map_err(module(&cell))?;
        let total: f64 = g.weights().iter().sum();
        let grad = gibbs::gradient(&set, beta, &x).map_err(module(&cell))?;
        let m1 = g.moment(i, 1, false).map_err(module(&cell))?;
        let err = (total - 1.0).abs().max((m1 - grad[i]).abs() / max_t.max(1e-300));
        let ok = g.weights().iter().all(|&w| w >= 0.0) && err <= 1e-12;
        weights.record(err, ok);
    }
    Ok(vec![lip, osc, lambda, partials, lbounds, weights])
}

/// Random polynomial of total degree ≤ `max_degree` in `dim` variables.
pub fn random_polynomial(rng: &mut StreamRng, dim: usize, max_degree: u32) -> Polynomial {
    let terms = rng.random_range(1..=6);
    let terms = (0..terms)
        .map(|_| {
            let mut e = vec![0u32; dim];
            for _ in 0..rng.random_range(0..=max_degree) {
                e[rng.random_range(0..dim)] += 1;
            }
            (uniform(rng, -2.0, 2.0), e)
        })
        .collect();
    Polynomial::new(dim, terms).expect("exponent vectors match the dimension")
}

/// Stein representation, Poisson identities, potential partials and the
/// semigroup and ergodic properties of the OU operators.
pub fn stein_suite(trials: usize, stream: &RandomStream) -> Result<Vec<CheckRow>> {
    let budget = OuBudget::default();
    let rad = CoordinateDistribution::rademacher();
    let mut rng = stream.tagged("stein").rng();
    let exact_trials = trials.clamp(1, 200);
    let mc_trials = (trials / 100).clamp(1, 5);

    let mut quartic = CheckRow::new("stein_quartic");
    let f = Polynomial::coordinate_power(1, 0, 4).map_err(module("stein_quartic"))?;
    for v in [SteinVariant::Third, SteinVariant::Fourth] {
        let r = stein_representation_check(&f, &rad, v, &budget, stream).map_err(module("stein_quartic"))?;
        let err = (r.lhs - 8.0).abs().max((r.rhs - 8.0).abs());
        quartic.record(err, r.passed && err <= 1e-10);
    }

    let mut poly = CheckRow::new("stein_polynomials");
    for k in 0..exact_trials {
        let cell = format!("stein_polynomials instance {k}");
        let n = rng.random_range(1..=8);
        let p = random_polynomial(&mut rng, n, 4);
        for v in [SteinVariant::Third, SteinVariant::Fourth] {
            let r = stein_representation_check(&p, &rad, v, &budget, stream).map_err(module(&cell))?;
            poly.record(r.discrepancy / r.tolerance * 1e-10, r.passed && r.exact);
        }
    }

    let mut soft = CheckRow::new("stein_softmax");
    for k in 0..exact_trials.min(50) {
        let cell = format!("stein_softmax instance {k}");
        let Instance { set, x: _, .. } = random_instance(&mut rng, 8, 8);
        let beta = log_uniform(&mut rng, 0.2, 3.0);
        let set = set.scaled(1.0 / set.profile().rinf.max(1e-300)).map_err(module(&cell))?;
        let f = SoftmaxFunction::new(&set, beta).map_err(module(&cell))?;
        for v in [SteinVariant::Third, SteinVariant::Fourth] {
            let r = stein_representation_check(&f, &rad, v, &budget, stream).map_err(module(&cell))?;
            soft.record(r.discrepancy / r.tolerance * 1e-10, r.passed && r.exact);
        }
    }

    let mut stein_mc = CheckRow::new("stein_monte_carlo");
    let gauss = CoordinateDistribution::gaussian();
    for k in 0..mc_trials {
        let cell = format!("stein_monte_carlo instance {k}");
        let n = rng.random_range(1..=4);
        let p = random_polynomial(&mut rng, n, 4);
        let r = stein_representation_check(&p, &gauss, SteinVariant::Fourth, &budget, &stream.child(k as u64))
            .map_err(module(&cell))?;
        stein_mc.record(r.discrepancy / r.std_error.max(1e-300), r.passed);
    }

    let mut closed = CheckRow::new("poisson_closed_form");
    for (k, f) in [
        Polynomial::linear(&[1.5, -0.5]).map_err(module("poisson_closed_form"))?,
        Polynomial::coordinate_power(2, 0, 2).map_err(module("poisson_closed_form"))?,
    ]
    .iter()
    .enumerate()
    {
        let x = [uniform(&mut rng, -2.0, 2.0), uniform(&mut rng, -2.0, 2.0)];
        let r = poisson_identity_check(f, &x, &budget, &stream.child(k as u64))
            .map_err(module("poisson_closed_form"))?;
        let err = (r.centered - r.minus_l_potential).abs();
        closed.record(err, r.passed && err <= 1e-10 * r.centered.abs().max(1.0));
    }

    let mut poisson_poly = CheckRow::new("poisson_polynomials");
    let mut pot_fd = CheckRow::new("potential_partial_fd");
    for k in 0..exact_trials.min(50) {
        let cell = format!("poisson_polynomials instance {k}");
        let n = rng.random_range(1..=4);
        let p = random_polynomial(&mut rng, n, 4);
        let x: Vec<f64> = (0..n).map(|_| uniform(&mut rng, -2.0, 2.0)).collect();
        let r = poisson_identity_check(&p, &x, &budget, stream).map_err(module(&cell))?;
        let mut err = (r.centered - r.minus_l_potential).abs();
        if let Some(v) = r.minus_potential_l {
            err = err.max((r.centered - v).abs());
        }
        poisson_poly.record(err, r.passed);

        // ∂_i^k ℙf against finite differences of ℙf, both exact for polynomials
        let i = rng.random_range(0..n);
        let h = 1e-2;
        let mut y = x.clone();
        let mut pot = |v: f64| {
            y[i] = v;
            ou_potential(&p, &y, &budget, stream).map(|e| e.value)
        };
        let stencil = [-2.0, -1.0, 1.0, 2.0].map(|s| pot(x[i] + s * h));
        let [m2, m1, p1, p2] = stencil.map(|r| r.map_err(module(&cell)));
        let (m2, m1, p1, p2) = (m2?, m1?, p1?, p2?);
        let fd1 = (-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * h);
        let a = potential_partial(&p, &x, i, 1, &budget, stream).map_err(module(&cell))?;
        let err = (a.value - fd1).abs() / a.value.abs().max(1.0);
        pot_fd.record(err, err <= 1e-6);
    }

    let mut poisson_soft = CheckRow::new("poisson_softmax_mc");
    let soft_budget = OuBudget {
        samples: 4_000,
        tail_tolerance: 1e-4,
        ..budget
    };
    for k in 0..mc_trials {
        let cell = format!("poisson_softmax_mc instance {k}");
        let Instance { set, x, .. } = random_instance(&mut rng, 4, 2);
        let set = set.scaled(1.0 / set.profile().rinf.max(1e-300)).map_err(module(&cell))?;
        let x: Vec<f64> = x.iter().map(|v| v / 3.0).collect();
        let f = SoftmaxFunction::new(&set, 1.0).map_err(module(&cell))?;
        let r = poisson_identity_check(&f, &x, &soft_budget, &stream.child(100 + k as u64))
            .map_err(module(&cell))?;
        poisson_soft.record((r.centered - r.minus_l_potential).abs() / r.tolerance, r.passed);
    }

    // P_s(P_t f) by Monte Carlo over the exact inner P_t f, against P_{s+t} f
    let mut semigroup = CheckRow::new("semigroup");
    let mc_budget = OuBudget {
        force_monte_carlo: true,
        ..budget
    };
    for k in 0..mc_trials {
        let cell = format!("semigroup instance {k}");
        let n = rng.random_range(1..=3);
        let p = random_polynomial(&mut rng, n, 4);
        let (s, t) = (uniform(&mut rng, 0.05, 1.0), uniform(&mut rng, 0.05, 1.0));
        let x: Vec<f64> = (0..n).map(|_| uniform(&mut rng, -2.0, 2.0)).collect();
        let inner = p.clone();
        let (a, b) = ((-t).exp(), (-(2.0 * t)).exp_m1().abs().sqrt());
        let pt = CustomFunction::new(n, move |y: &[f64]| inner.ou_exact(a, b, y));
        let outer = ou_apply(&pt, s, &x, &mc_budget, &stream.child(200 + k as u64)).map_err(module(&cell))?;
        let direct = ou_apply(&p, s + t, &x, &budget, stream).map_err(module(&cell))?;
        let z = (outer.value - direct.value).abs() / outer.std_error.max(1e-300);
        semigroup.record(z, z <= 4.0);
    }

    let mut ergodic = CheckRow::new("ergodic_limit");
    for k in 0..exact_trials.min(50) {
        let cell = format!("ergodic_limit instance {k}");
        let n = rng.random_range(1..=6);
        let p = random_polynomial(&mut rng, n, 4);
        let x: Vec<f64> = (0..n).map(|_| uniform(&mut rng, -2.0, 2.0)).collect();
        let mean = p.expectation_gaussian();
        let mut prev = f64::INFINITY;
        let mut ok = true;
        let mut last = 0.0;
        for t in [1.0, 4.0, 16.0, 40.0] {
            let v = ou_apply(&p, t, &x, &budget, stream).map_err(module(&cell))?.value;
            let d = (v - mean).abs();
            ok &= d <= prev * (1.0 + 1e-12) + 1e-12;
            prev = d;
            last = d;
        }
        let scale = p.terms().iter().map(|(c, _)| c.abs()).sum::<f64>().max(1.0) * (1.0 + max_abs(&x)).powi(4);
        let err = last / scale;
        ergodic.record(err, ok && err <= 1e-12);
    }

    Ok(vec![
        quartic,
        poly,
        soft,
        stein_mc,
        closed,
        poisson_poly,
        pot_fd,
        poisson_soft,
        semigroup,
        ergodic,
    ])
}
