use proptest::prelude::*;
use supremum_core::estimator::exact_sup;
use supremum_core::gibbs::{analytic_partial, derivative_bound_check, gradient, log_partition};
use supremum_core::{IndexSet, WeightedMeasure};

#[derive(Debug, Clone)]
struct Case {
    set: IndexSet,
    beta: f64,
    x: Vec<f64>,
    y: Vec<f64>,
}

fn case(max_card: usize, max_dim: usize) -> impl Strategy<Value = Case> {
    (1..=max_dim, 1..=max_card).prop_flat_map(|(dim, card)| {
        (
            prop::collection::vec(prop::collection::vec(-2.0f64..2.0, dim), card),
            -3.0f64..3.0,
            prop::collection::vec(-4.0f64..4.0, dim),
            prop::collection::vec(-4.0f64..4.0, dim),
        )
            .prop_map(|(rows, lb, x, y)| Case {
                set: IndexSet::explicit(&rows).unwrap(),
                beta: lb.exp(),
                x,
                y,
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn sandwich(c in case(64, 16)) {
        let f = log_partition(&c.set, c.beta, &c.x).unwrap();
        let m = exact_sup(&c.set, &c.x).unwrap();
        prop_assert!(f - m >= 0.0);
        prop_assert!(f - m <= c.set.log_cardinality() / c.beta + 1e-12 * f.abs());
    }

    #[test]
    fn midpoint_convexity(c in case(32, 8)) {
        let mid: Vec<f64> = c.x.iter().zip(&c.y).map(|(a, b)| 0.5 * (a + b)).collect();
        let fx = log_partition(&c.set, c.beta, &c.x).unwrap();
        let fy = log_partition(&c.set, c.beta, &c.y).unwrap();
        let fm = log_partition(&c.set, c.beta, &mid).unwrap();
        prop_assert!(fm <= 0.5 * (fx + fy) + 1e-12 * (fx.abs() + fy.abs()).max(1.0));
    }

    #[test]
    fn gradient_bounded_by_r2(c in case(32, 8)) {
        let g = gradient(&c.set, c.beta, &c.x).unwrap();
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!(norm <= c.set.profile().r2 * (1.0 + 1e-12));
    }

    #[test]
    fn gradient_matches_first_partials(c in case(16, 6)) {
        let g = gradient(&c.set, c.beta, &c.x).unwrap();
        for (i, gi) in g.iter().enumerate() {
            let a = analytic_partial(&c.set, c.beta, &c.x, i, 1).unwrap();
            prop_assert!((a - gi).abs() <= 1e-12 * gi.abs().max(1.0));
        }
    }

    #[test]
    fn partials_match_finite_differences(c in case(16, 6), i in 0usize..6) {
        let i = i % c.set.dim();
        let r = derivative_bound_check(&c.set, c.beta, &c.x, i).unwrap();
        prop_assert!(r.finite_differences_agree(1e-4), "{r:?}");
        prop_assert!(r.bounds_hold(), "{r:?}");
    }

    #[test]
    fn uniform_log_laplace_identity(c in case(32, 8)) {
        // Λ_uniform(βx) = β F_β(x) − log|T|
        let mu = WeightedMeasure::uniform(&c.set);
        let bx: Vec<f64> = c.x.iter().map(|v| c.beta * v).collect();
        let lhs = mu.log_laplace(&bx).unwrap();
        let rhs = c.beta * log_partition(&c.set, c.beta, &c.x).unwrap() - c.set.log_cardinality();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1.0));
    }

    #[test]
    fn log_laplace_derivative_bounds(c in case(32, 8), i in 0usize..8) {
        let i = i % c.set.dim();
        let mu = WeightedMeasure::uniform(&c.set);
        prop_assert!(mu.log_laplace_bound_check(&c.x, i).unwrap());
    }
}

/// Nonincreasing in β and collapsing to the maximum once β·margin is large.
#[test]
fn monotone_collapse() {
    let set = IndexSet::explicit(&[[1.0, 0.0], [0.0, 1.0], [-0.5, 0.7], [0.3, 0.3]]).unwrap();
    let x = [1.3, 0.9];
    let s = set.inner_products(&x);
    let mut sorted = s.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let (max, margin) = (sorted[0], sorted[0] - sorted[1]);
    let mut prev = f64::INFINITY;
    for k in 0..=60 {
        let beta = 0.05 * 1.2f64.powi(k);
        let f = log_partition(&set, beta, &x).unwrap();
        assert!(f <= prev, "beta {beta}");
        prev = f;
    }
    let f = log_partition(&set, 60.0 / margin, &x).unwrap();
    assert!(f - max < 1e-6);
}
