//! Subcommand dispatch and result emission.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::json;
use supremum_core::bounds::{
    self, beta_bounded, beta_fourth_moment, bound_profile, error_report, laplace_growth_experiment,
    phase_curve_table, sk_universality_experiment, sudakov_check, tensor_universality_experiment,
    Marker,
};
use supremum_core::estimator::{
    enumerable_configurations, estimate_complexity, exact_discrete_complexity, softmax_complexity,
    EstimateOptions,
};
use supremum_core::{
    BasisMode, CoordinateDistribution, GeometricProfile, IndexSet, RandomStream, SupremumEstimate,
};

use crate::config::{parse_sizes, Beta, Command, ConfigEcho, Format, RunConfig};
use crate::error::{CliError, Result};
use crate::set_spec::SetSpec;
use crate::table::{Cell, Table};
use crate::verify;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Multiple of the standard error within which an estimate must cover an
/// exact oracle.
pub const ORACLE_COVERAGE: f64 = 5.0;
/// Multiple of the propagated standard error for the Gaussian self-comparison.
pub const SELF_COMPARISON: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Assertion {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub config: ConfigEcho,
    pub version: &'static str,
    pub command: Command,
    pub tables: Vec<Table>,
    pub assertions: Vec<Assertion>,
    pub elapsed_seconds: f64,
}

impl RunRecord {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            2
        }
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    fn assertion_table(&self) -> Table {
        let mut t = Table::new(format!("{}_assertions", stem(self.command)), &["assertion", "passed", "detail"]);
        for a in &self.assertions {
            t.push(vec![a.name.clone().into(), a.passed.into(), a.detail.clone().into()]);
        }
        t
    }

    /// All tables including the assertion table, in emission order.
    pub fn all_tables(&self) -> Vec<Table> {
        let mut v = self.tables.clone();
        v.push(self.assertion_table());
        v
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "command": self.command.name(),
            "version": self.version,
            "config": self.config,
            "tables": self.all_tables().iter().map(|t| t.name.clone()).collect::<Vec<_>>(),
            "assertions": self.assertions,
            "passed": self.passed(),
            "elapsed_seconds": self.elapsed_seconds,
        })
    }
}

fn stem(c: Command) -> String {
    c.name().replace('-', "_")
}

fn write(path: PathBuf, bytes: &[u8]) -> Result<PathBuf> {
    fs::write(&path, bytes).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

fn pretty(v: &serde_json::Value) -> Result<Vec<u8>> {
    let mut s = serde_json::to_vec_pretty(v).map_err(|e| CliError::Serialize(e.to_string()))?;
    s.push(b'\n');
    Ok(s)
}

/// Write every table as `{dir}/{name}.csv` and/or `.json`, plus
/// `{dir}/{command}_record.json` when JSON is requested. Returns the paths in
/// write order.
pub fn emit(record: &RunRecord, format: Format, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_owned(),
        source,
    })?;
    let mut out = Vec::new();
    for t in record.all_tables() {
        if format.csv() {
            out.push(write(dir.join(format!("{}.csv", t.name)), t.to_csv().as_bytes())?);
        }
        if format.json() {
            out.push(write(dir.join(format!("{}.json", t.name)), &pretty(&t.to_json())?)?);
        }
    }
    if format.json() {
        let name = format!("{}_record.json", stem(record.command));
        out.push(write(dir.join(name), &pretty(&record.to_json())?)?);
    }
    Ok(out)
}

fn options(config: &RunConfig) -> EstimateOptions {
    EstimateOptions {
        replicates: config.replicates,
        paired: config.paired,
        bootstrap: (config.bootstrap > 0).then_some(config.bootstrap),
    }
}

fn stream(config: &RunConfig, command: Command) -> RandomStream {
    RandomStream::for_component(config.seed, command.name())
}

fn set_or(config: &RunConfig, default: SetSpec) -> SetSpec {
    config.set.clone().unwrap_or(default)
}

fn module(cell: impl Into<String>) -> impl FnOnce(supremum_core::Error) -> CliError {
    CliError::module(cell)
}

fn sizes(config: &RunConfig, default: &str) -> Vec<usize> {
    config
        .sizes
        .clone()
        .unwrap_or_else(|| parse_sizes(default).expect("default sizes are well-formed"))
}

/// Run the configured subcommand. Does not write files; see [`emit`].
pub fn run(config: &RunConfig) -> Result<RunRecord> {
    let command = config.command.ok_or(CliError::MissingSubcommand)?;
    let start = Instant::now();
    let (tables, assertions) = match command {
        Command::Estimate => estimate(config)?,
        Command::Bounds => bounds_cmd(config)?,
        Command::Sudakov => sudakov(config)?,
        Command::Laplace => laplace(config)?,
        Command::Sk => sk(config)?,
        Command::Tensor => tensor(config)?,
        Command::PhaseCurves => phase_curves(config)?,
        Command::VerifySoftmax => verify_cmd(config, command, verify::softmax_suite)?,
        Command::VerifyGibbs => verify_cmd(config, command, verify::gibbs_suite)?,
        Command::VerifyStein => verify_cmd(config, command, verify::stein_suite)?,
    };
    Ok(RunRecord {
        config: config.echo(),
        version: VERSION,
        command,
        tables,
        assertions,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    })
}

type Outcome = (Vec<Table>, Vec<Assertion>);

fn estimate_cells(e: &SupremumEstimate) -> Vec<Cell> {
    vec![
        e.method.to_string().into(),
        e.replicates.into(),
        e.mean.into(),
        e.std_error.into(),
        e.ci95.0.into(),
        e.ci95.1.into(),
    ]
}

/// β from the config: a fixed value, or the optimizer for the law at hand.
fn resolve_beta(
    beta: Beta,
    profile: &GeometricProfile,
    dist: &CoordinateDistribution,
    bound: Option<f64>,
) -> supremum_core::Result<f64> {
    match beta {
        Beta::Fixed(b) => Ok(b),
        Beta::Auto => match bound.or(dist.moments().bound) {
            Some(m) => beta_bounded(profile, m),
            None => beta_fourth_moment(profile, &dist.moments()),
        },
    }
}

fn estimate(config: &RunConfig) -> Result<Outcome> {
    let spec = set_or(config, SetSpec::Basis { n: 8, mode: BasisMode::Canonical });
    let set = spec.build()?;
    let dist = config.distribution;
    let cell = format!("estimate {spec} {dist}");
    let s = stream(config, Command::Estimate);
    let e = estimate_complexity(&set, &dist, &options(config), &s).map_err(module(cell.clone()))?;
    let oracle = match enumerable_configurations(&dist, set.dim()) {
        Some(_) => Some(exact_discrete_complexity(&set, &dist).map_err(module(cell.clone()))?),
        None => None,
    };

    let mut t = Table::new(
        "estimate",
        &[
            "set", "distribution", "method", "replicates", "mean", "std_error", "ci_low", "ci_high",
            "bootstrap_low", "bootstrap_high", "exact", "seed",
        ],
    );
    let mut row = vec![spec.to_string().into(), dist.to_string().into()];
    row.extend(estimate_cells(&e));
    row.push(e.bootstrap_ci95.map(|c| c.0).into());
    row.push(e.bootstrap_ci95.map(|c| c.1).into());
    row.push(oracle.as_ref().map(|o| o.mean).into());
    row.push(format!("{:#018x}", config.seed).into());
    t.push(row);

    let mut assertions = vec![Assertion::new(
        "finite_estimate",
        e.mean.is_finite() && e.std_error.is_finite(),
        format!("mean {} se {}", e.mean, e.std_error),
    )];
    if let Some(o) = &oracle {
        let z = (e.mean - o.mean).abs() / e.std_error;
        assertions.push(Assertion::new(
            "covers_exact_oracle",
            e.covers(o.mean, ORACLE_COVERAGE),
            format!("|mean - exact| = {} std errors (limit {ORACLE_COVERAGE})", z),
        ));
    }
    let mut tables = vec![t];

    if let Some(beta) = config.beta {
        let beta = resolve_beta(beta, &set.profile(), &dist, config.bound).map_err(module(cell.clone()))?;
        let sm = softmax_complexity(&set, &dist, beta, &options(config), &s.tagged("softmax"))
            .map_err(module(cell))?;
        let mut t = Table::new(
            "estimate_softmax",
            &[
                "beta", "softmax_mean", "softmax_std_error", "supremum_mean", "supremum_std_error",
                "certified_offset", "domination_violations",
            ],
        );
        t.push(vec![
            beta.into(),
            sm.softmax.mean.into(),
            sm.softmax.std_error.into(),
            sm.supremum.mean.into(),
            sm.supremum.std_error.into(),
            sm.certified_offset.into(),
            sm.domination_violations.into(),
        ]);
        assertions.push(Assertion::new(
            "softmax_sandwich",
            sm.domination_violations == 0,
            format!("{} replicates outside [sup, sup + log|T|/beta]", sm.domination_violations),
        ));
        tables.push(t);
    }
    Ok((tables, assertions))
}

fn bounds_cmd(config: &RunConfig) -> Result<Outcome> {
    let spec = set_or(config, SetSpec::Basis { n: 8, mode: BasisMode::Canonical });
    let set = spec.build()?;
    let dist = config.distribution;
    let cell = format!("bounds {spec} {dist}");
    let r = error_report(&set, &dist, &options(config), &stream(config, Command::Bounds))
        .map_err(module(cell.clone()))?;

    let mut t = Table::new("bounds", &["quantity", "value", "std_error", "ratio"]);
    let mut est = |name: &str, e: &SupremumEstimate| {
        t.push(vec![name.into(), e.mean.into(), e.std_error.into(), Cell::Empty]);
    };
    est("complexity", &r.complexity);
    est("gaussian", &r.gaussian);
    est("gap", &r.gap);
    let b = &r.bounds;
    let q = &r.ratios;
    let curves: [(&str, Option<f64>, Option<f64>); 8] = [
        ("u", Some(b.u), None),
        ("trivial_k", Some(b.trivial_k), Some(q.trivial_k)),
        ("talagrand_t", Some(b.talagrand_t), Some(q.talagrand_t)),
        ("s1", Some(b.s1), None),
        ("s2", Some(b.s2), None),
        ("s_combined", b.s_combined, q.s_combined),
        ("r3_variant", b.r3_variant, q.r3_variant),
        ("corollary_l3", Some(b.corollary_l3), Some(q.corollary_l3)),
    ];
    for (name, v, ratio) in curves {
        t.push(vec![name.into(), v.into(), Cell::Empty, ratio.into()]);
    }
    t.push(vec![
        "corollary_l4".into(),
        b.corollary_l4.into(),
        Cell::Empty,
        q.corollary_l4.into(),
    ]);
    let p = &r.profile;
    for (name, v) in [
        ("r2", p.r2),
        ("r3", p.r3),
        ("r4", p.r4),
        ("rinf", p.rinf),
        ("col3", p.col3),
        ("col4", p.col4),
        ("u1", p.u1),
        ("u2", p.u2),
        ("log_cardinality", p.log_card),
    ] {
        t.push(vec![name.into(), v.into(), Cell::Empty, Cell::Empty]);
    }
    t.push(vec!["flag_subgaussian".into(), r.flag_subgaussian.into(), Cell::Empty, Cell::Empty]);
    t.push(vec!["flag_bounded".into(), r.flag_bounded.into(), Cell::Empty, Cell::Empty]);
    let b4 = beta_fourth_moment(p, &dist.moments()).ok();
    let bm = config.bound.or(dist.moments().bound).and_then(|m| beta_bounded(p, m).ok());
    t.push(vec!["beta_fourth_moment".into(), b4.into(), Cell::Empty, Cell::Empty]);
    t.push(vec!["beta_bounded".into(), bm.into(), Cell::Empty, Cell::Empty]);

    // the curves over the configured grid, one row per (u, curve)
    let mut curves_t = Table::new("bounds_curves", &["u", "curve", "value"]);
    let mut monotone = true;
    let mut ordered = true;
    let mut prev: Option<[f64; 6]> = None;
    for u in config.grid_values() {
        let c = bound_profile(p, u, &dist.moments()).map_err(module(format!("{cell} u={u}")))?;
        let row = [c.trivial_k, c.talagrand_t, c.s1, c.s2, c.corollary_l3, c.corollary_l4];
        for (name, v) in ["trivial_k", "talagrand_t", "s1", "s2", "corollary_l3", "corollary_l4"]
            .iter()
            .zip(row)
        {
            curves_t.push(vec![u.into(), (*name).into(), v.into()]);
        }
        for (name, v) in [("s_combined", c.s_combined), ("r3_variant", c.r3_variant)] {
            if let Some(v) = v {
                curves_t.push(vec![u.into(), name.into(), v.into()]);
            }
        }
        if let Some(pr) = prev {
            monotone &= pr.iter().zip(&row).all(|(a, b)| *b >= *a * (1.0 - 1e-12));
        }
        ordered &= c.s1 <= c.talagrand_t * (1.0 + 1e-12);
        prev = Some(row);
    }

    let ratios_ok = [Some(q.trivial_k), Some(q.talagrand_t), q.s_combined, q.r3_variant, Some(q.corollary_l3), Some(q.corollary_l4)]
        .into_iter()
        .flatten()
        .all(|v| v.is_finite() || r.gap.mean == 0.0 || b.u == 0.0);
    let mut assertions = vec![
        Assertion::new("curves_nonnegative_monotone", monotone, "each curve nondecreasing in u over the grid"),
        Assertion::new("s1_below_talagrand", ordered && b.s1 <= b.talagrand_t * (1.0 + 1e-12), "s1(u) <= t(u)"),
        Assertion::new("ratios_finite", ratios_ok, "gap/bound finite for positive bounds"),
    ];
    if dist == CoordinateDistribution::gaussian() {
        assertions.push(Assertion::new(
            "gaussian_self_comparison",
            r.gap_within(SELF_COMPARISON),
            format!("gap {} se {}", r.gap.mean, r.gap.std_error),
        ));
    }
    Ok((vec![t, curves_t], assertions))
}

fn sudakov(config: &RunConfig) -> Result<Outcome> {
    let spec = set_or(config, SetSpec::Basis { n: 8, mode: BasisMode::Canonical });
    let set = spec.build()?;
    let r = sudakov_check(&set, &options(config), &stream(config, Command::Sudakov))
        .map_err(module(format!("sudakov {spec}")))?;
    let mut t = Table::new(
        "sudakov",
        &[
            "set", "separation", "log_cardinality", "method", "replicates", "rademacher_mean",
            "rademacher_std_error", "ci_low", "ci_high", "hypothesis_ratio", "conclusion_ratio",
        ],
    );
    let mut row = vec![spec.to_string().into(), r.separation.into(), r.log_cardinality.into()];
    row.extend(estimate_cells(&r.rademacher));
    row.push(r.hypothesis_ratio.into());
    row.push(r.conclusion_ratio.into());
    t.push(row);
    let a = Assertion::new(
        "sudakov_ratios",
        r.holds,
        format!("hypothesis {} conclusion {}", r.hypothesis_ratio, r.conclusion_ratio),
    );
    Ok((vec![t], vec![a]))
}

fn laplace(config: &RunConfig) -> Result<Outcome> {
    let ns = sizes(config, "2^4..2^14");
    let g = laplace_growth_experiment(&ns, &options(config), &stream(config, Command::Laplace))
        .map_err(module("laplace"))?;
    let mut t = Table::new(
        "laplace",
        &[
            "n", "log_n", "laplace_mean", "laplace_std_error", "gaussian_mean", "gaussian_std_error",
            "gap", "gap_std_error", "gap_over_log", "gap_over_log34", "gaussian_max_bound",
            "gaussian_bound_ok",
        ],
    );
    for r in &g.rows {
        t.push(vec![
            r.n.into(),
            r.log_n.into(),
            r.laplace.mean.into(),
            r.laplace.std_error.into(),
            r.gaussian.mean.into(),
            r.gaussian.std_error.into(),
            r.gap.mean.into(),
            r.gap.std_error.into(),
            r.gap_over_log.into(),
            r.gap_over_log34.into(),
            r.gaussian_max_bound.into(),
            r.gaussian_bound_ok.into(),
        ]);
    }
    let mut s = Table::new("laplace_summary", &["spearman_log34", "spread_log", "increasing", "stable"]);
    s.push(vec![g.rho_log34.into(), g.spread_log.into(), g.increasing.into(), g.stable.into()]);
    let assertions = vec![
        Assertion::new(
            "gap_over_log34_increasing",
            g.increasing,
            format!("spearman {} (limit {})", g.rho_log34, bounds::TREND_RHO),
        ),
        Assertion::new(
            "gap_over_log_stable",
            g.stable,
            format!("max/min {} (limit {})", g.spread_log, bounds::LAPLACE_STABLE_SPREAD),
        ),
        Assertion::new(
            "gaussian_max_bound",
            g.rows.iter().all(|r| r.gaussian_bound_ok),
            "g(T) <= sqrt(2 log n) + 4 se",
        ),
    ];
    Ok((vec![t, s], assertions))
}

fn sk(config: &RunConfig) -> Result<Outcome> {
    let ns = sizes(config, "4..14");
    let dist = config.distribution;
    let u = sk_universality_experiment(&ns, &dist, &options(config), &stream(config, Command::Sk))
        .map_err(module(format!("sk {dist}")))?;
    let mut t = Table::new(
        "sk",
        &[
            "N", "value_mean", "value_std_error", "gaussian_mean", "gaussian_std_error", "gap",
            "gap_std_error", "scaled_gap",
        ],
    );
    for r in &u.rows {
        t.push(vec![
            r.spins.into(),
            r.value.mean.into(),
            r.value.std_error.into(),
            r.gaussian.mean.into(),
            r.gaussian.std_error.into(),
            r.gap.mean.into(),
            r.gap.std_error.into(),
            r.scaled_gap.into(),
        ]);
    }
    let mut s = Table::new("sk_summary", &["distribution", "exponent", "spread", "bounded"]);
    s.push(vec![dist.to_string().into(), u.exponent.into(), u.spread.into(), u.bounded.into()]);
    let a = Assertion::new(
        "scaled_gap_bounded",
        u.bounded,
        format!("max/min {} (limit {})", u.spread, bounds::SK_SPREAD_LIMIT),
    );
    Ok((vec![t, s], vec![a]))
}

fn tensor(config: &RunConfig) -> Result<Outcome> {
    let ns = sizes(config, "4..12");
    let dist = config.distribution;
    let m = config.order;
    let u = tensor_universality_experiment(&ns, m, &dist, &options(config), &stream(config, Command::Tensor))
        .map_err(module(format!("tensor m={m} {dist}")))?;
    let mut t = Table::new(
        "tensor",
        &[
            "N", "m", "rate", "gaussian_mean", "gaussian_std_error", "gaussian_sk_normalized",
            "value_mean", "value_std_error", "gap", "gap_std_error", "gap_over_rate", "in_band",
        ],
    );
    for r in &u.rows {
        t.push(vec![
            r.spins.into(),
            m.into(),
            r.rate.into(),
            r.gaussian.mean.into(),
            r.gaussian.std_error.into(),
            r.gaussian_sk_normalized.into(),
            r.value.mean.into(),
            r.value.std_error.into(),
            r.gap.mean.into(),
            r.gap.std_error.into(),
            r.gap_over_rate.into(),
            r.in_band.into(),
        ]);
    }
    let a = Assertion::new(
        "gaussian_in_band",
        u.all_in_band,
        format!("normalized Gaussian value within [{}, {}]", u.band.0, u.band.1),
    );
    Ok((vec![t], vec![a]))
}

fn phase_curves(config: &RunConfig) -> Result<Outcome> {
    let spec = set_or(config, SetSpec::DiagCube { n: 16, alpha: 0.25, k: 6 });
    let set: IndexSet = spec.build()?;
    let profile = set.profile();
    let cell = format!("phase-curves {spec}");
    let m = config
        .bound
        .or(config.distribution.moments().bound)
        .ok_or_else(|| CliError::Module {
            cell: cell.clone(),
            source: supremum_core::Error::MissingBound,
        })?;
    let rows = phase_curve_table(&profile, m, &config.grid_values()).map_err(module(cell))?;
    let mut t = Table::new("phase_curves", &["u", "k", "t", "s1", "s2", "s", "m_s", "in_window", "marker"]);
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
    let (mut cross1, mut cross2, mut ordered) = (true, true, true);
    for r in &rows {
        let marker = match r.marker {
            Marker::Grid => "",
            Marker::U1 => "u1",
            Marker::U2 => "u2",
        };
        t.push(vec![
            r.u.into(),
            r.k.into(),
            r.t.into(),
            r.s1.into(),
            r.s2.into(),
            r.s.into(),
            r.m_s.into(),
            r.in_window.into(),
            marker.into(),
        ]);
        match r.marker {
            Marker::U1 => cross1 &= rel(r.s1, r.s2) <= 1e-12,
            Marker::U2 => cross2 &= rel(r.k, r.t) <= 1e-12,
            Marker::Grid => {}
        }
        if r.u <= profile.u2 {
            ordered &= r.s1.max(r.s2) <= r.t * (1.0 + 1e-12);
        }
    }
    let mut w = Table::new("phase_window", &["set", "u1", "u2", "r2", "r4", "rinf", "bound"]);
    w.push(vec![
        spec.to_string().into(),
        profile.u1.into(),
        profile.u2.into(),
        profile.r2.into(),
        profile.r4.into(),
        profile.rinf.into(),
        m.into(),
    ]);
    let assertions = vec![
        Assertion::new("crossover_u1", cross1, "s1(u1) = s2(u1)"),
        Assertion::new("crossover_u2", cross2, "k(u2) = t(u2)"),
        Assertion::new("ordering_below_u2", ordered, "max(s1, s2) <= t for u <= u2"),
    ];
    Ok((vec![t, w], assertions))
}

fn verify_cmd(
    config: &RunConfig,
    command: Command,
    suite: fn(usize, &RandomStream) -> Result<Vec<verify::CheckRow>>,
) -> Result<Outcome> {
    let rows = suite(config.trials, &stream(config, command))?;
    let assertions = rows
        .iter()
        .map(|r| {
            Assertion::new(
                r.check,
                r.passed(),
                format!("{} of {} instances failed", r.failures, r.instances),
            )
        })
        .collect();
    Ok((vec![verify::table(&stem(command), &rows)], assertions))
}
