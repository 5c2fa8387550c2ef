//! Flat `key=value` run configuration.
//!
//! Entries are separated by newlines or whitespace; `#` starts a comment.
//! Unknown keys are errors. Later entries override earlier ones, and command
//! line flags are applied after the file.
//!
//! | key          | value                                                   | default           |
//! |--------------|---------------------------------------------------------|-------------------|
//! | `subcommand` | `estimate`, `bounds`, `sudakov`, `laplace`, `sk`, `tensor`, `phase-curves`, `verify-softmax`, `verify-stein`, `verify-gibbs` | none |
//! | `set`        | set descriptor, e.g. `basis:n=8`                        | per subcommand    |
//! | `distribution` | `rademacher`, `gaussian`, `uniform`, `laplace`, `laplace-normalized`, `scaled-rademacher:M`, `two-point:p` | `rademacher` |
//! | `replicates` | integer ≥ 1                                             | `100000`          |
//! | `seed`       | decimal or `0x` hex                                     | `0x00C0FFEE`      |
//! | `beta`       | positive real or `auto`                                 | unset             |
//! | `output_dir` | path                                                    | `out`             |
//! | `format`     | `csv`, `json`, `both`                                   | `both`            |
//! | `grid`       | `u` values `a,b,c` or `log:lo:hi:count`                 | `log:0.1:100:40`  |
//! | `sizes`      | `a,b,c`, `lo..hi` or `2^lo..2^hi`                       | per subcommand    |
//! | `order`      | tensor order `m`                                        | `2`               |
//! | `bound`      | almost-sure bound `M` for the phase curves              | from distribution |
//! | `trials`     | random instances per `verify` check                     | `1000`            |
//! | `bootstrap`  | bootstrap resamples for `estimate` (`0` disables)       | `0`               |
//! | `paired`     | `true` / `false`                                        | `false`           |

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;
use supremum_core::CoordinateDistribution;

use crate::error::{CliError, Result};
use crate::set_spec::SetSpec;

pub const DEFAULT_SEED: u64 = 0x00C0_FFEE;
pub const DEFAULT_REPLICATES: usize = 100_000;
pub const DEFAULT_TRIALS: usize = 1000;
pub const DEFAULT_GRID: &str = "log:0.1:100:40";

pub const KEYS: [&str; 15] = [
    "subcommand",
    "set",
    "distribution",
    "replicates",
    "seed",
    "beta",
    "output_dir",
    "format",
    "grid",
    "sizes",
    "order",
    "bound",
    "trials",
    "bootstrap",
    "paired",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Estimate,
    Bounds,
    Sudakov,
    Laplace,
    Sk,
    Tensor,
    PhaseCurves,
    VerifySoftmax,
    VerifyStein,
    VerifyGibbs,
}

impl Command {
    pub const ALL: [Command; 10] = [
        Command::Estimate,
        Command::Bounds,
        Command::Sudakov,
        Command::Laplace,
        Command::Sk,
        Command::Tensor,
        Command::PhaseCurves,
        Command::VerifySoftmax,
        Command::VerifyStein,
        Command::VerifyGibbs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Estimate => "estimate",
            Command::Bounds => "bounds",
            Command::Sudakov => "sudakov",
            Command::Laplace => "laplace",
            Command::Sk => "sk",
            Command::Tensor => "tensor",
            Command::PhaseCurves => "phase-curves",
            Command::VerifySoftmax => "verify-softmax",
            Command::VerifyStein => "verify-stein",
            Command::VerifyGibbs => "verify-gibbs",
        }
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown subcommand `{s}`"))
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Both,
}

impl Format {
    pub fn csv(self) -> bool {
        self != Format::Json
    }

    pub fn json(self) -> bool {
        self != Format::Csv
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Beta {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub set: Option<SetSpec>,
    pub distribution: CoordinateDistribution,
    pub replicates: usize,
    pub seed: u64,
    pub beta: Option<Beta>,
    pub output_dir: PathBuf,
    pub format: Format,
    pub grid: String,
    pub sizes: Option<Vec<usize>>,
    pub order: usize,
    pub bound: Option<f64>,
    pub trials: usize,
    pub bootstrap: usize,
    pub paired: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: None,
            set: None,
            distribution: CoordinateDistribution::rademacher(),
            replicates: DEFAULT_REPLICATES,
            seed: DEFAULT_SEED,
            beta: None,
            output_dir: PathBuf::from("out"),
            format: Format::Both,
            grid: DEFAULT_GRID.to_owned(),
            sizes: None,
            order: 2,
            bound: None,
            trials: DEFAULT_TRIALS,
            bootstrap: 0,
            paired: false,
        }
    }
}

/// One `key=value` entry and where it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub origin: String,
    pub key: String,
    pub value: String,
}

/// Split config text into entries, keeping line numbers for messages.
pub fn tokenize(text: &str) -> Result<Vec<Entry>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        for token in line.split_whitespace() {
            let origin = format!("line {}", n + 1);
            let (key, value) = token.split_once('=').ok_or_else(|| CliError::Malformed {
                origin: origin.clone(),
                text: token.to_owned(),
            })?;
            out.push(Entry {
                origin,
                key: key.to_owned(),
                value: value.to_owned(),
            });
        }
    }
    Ok(out)
}

fn parse_seed(s: &str) -> std::result::Result<u64, String> {
    let r = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(&hex.replace('_', ""), 16),
        None => s.replace('_', "").parse(),
    };
    r.map_err(|_| format!("`{s}` is not a 64-bit integer"))
}

fn parse_bool(s: &str) -> std::result::Result<bool, String> {
    match s {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(format!("`{s}` is not a boolean")),
    }
}

fn parse_count(s: &str) -> std::result::Result<usize, String> {
    s.replace('_', "")
        .parse()
        .map_err(|_| format!("`{s}` is not a nonnegative integer"))
}

/// `a,b,c`, `lo..hi` (inclusive) or `2^lo..2^hi`.
pub fn parse_sizes(s: &str) -> std::result::Result<Vec<usize>, String> {
    if let Some((lo, hi)) = s.split_once("..") {
        if let (Some(a), Some(b)) = (lo.strip_prefix("2^"), hi.strip_prefix("2^")) {
            let (a, b): (u32, u32) = (
                a.parse().map_err(|_| format!("bad exponent `{a}`"))?,
                b.parse().map_err(|_| format!("bad exponent `{b}`"))?,
            );
            if a > b || b > 40 {
                return Err(format!("bad exponent range `{s}`"));
            }
            return Ok((a..=b).map(|k| 1usize << k).collect());
        }
        let (a, b) = (parse_count(lo)?, parse_count(hi)?);
        if a > b {
            return Err(format!("empty range `{s}`"));
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|t| parse_count(t.trim())).collect()
}

/// `a,b,c` or `log:lo:hi:count`.
pub fn parse_grid(s: &str) -> std::result::Result<Vec<f64>, String> {
    if let Some(rest) = s.strip_prefix("log:") {
        let parts: Vec<&str> = rest.split(':').collect();
        let [lo, hi, count] = parts[..] else {
            return Err("log grid is `log:lo:hi:count`".into());
        };
        let lo: f64 = lo.parse().map_err(|_| format!("bad grid bound `{lo}`"))?;
        let hi: f64 = hi.parse().map_err(|_| format!("bad grid bound `{hi}`"))?;
        let count = parse_count(count)?;
        return supremum_core::bounds::log_grid(lo, hi, count).map_err(|e| e.to_string());
    }
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad grid value `{t}`")))
        .collect()
}

impl RunConfig {
    pub fn apply(&mut self, entry: &Entry) -> Result<()> {
        let v = entry.value.as_str();
        let bad = |reason: String| CliError::InvalidValue {
            origin: entry.origin.clone(),
            key: entry.key.clone(),
            reason,
        };
        match entry.key.as_str() {
            "subcommand" => self.command = Some(v.parse().map_err(bad)?),
            "set" => self.set = Some(v.parse().map_err(bad)?),
            "distribution" => {
                self.distribution = v.parse().map_err(|e: supremum_core::Error| bad(e.to_string()))?
            }
            "replicates" => {
                let r = parse_count(v).map_err(bad)?;
                if r == 0 {
                    return Err(bad("must be at least 1".into()));
                }
                self.replicates = r;
            }
            "seed" => self.seed = parse_seed(v).map_err(bad)?,
            "beta" => {
                self.beta = Some(if v == "auto" {
                    Beta::Auto
                } else {
                    let b: f64 = v.parse().map_err(|_| bad(format!("`{v}` is not a number")))?;
                    if !(b > 0.0) || !b.is_finite() {
                        return Err(bad("must be positive and finite".into()));
                    }
                    Beta::Fixed(b)
                })
            }
            "output_dir" => self.output_dir = PathBuf::from(v),
            "format" => {
                self.format = match v {
                    "csv" => Format::Csv,
                    "json" => Format::Json,
                    "both" => Format::Both,
                    _ => return Err(bad(format!("`{v}` is not csv, json or both"))),
                }
            }
            "grid" => {
                parse_grid(v).map_err(bad)?;
                self.grid = v.to_owned();
            }
            "sizes" => self.sizes = Some(parse_sizes(v).map_err(bad)?),
            "order" => self.order = parse_count(v).map_err(bad)?,
            "bound" => {
                let m: f64 = v.parse().map_err(|_| bad(format!("`{v}` is not a number")))?;
                if !(m > 0.0) || !m.is_finite() {
                    return Err(bad("must be positive and finite".into()));
                }
                self.bound = Some(m);
            }
            "trials" => self.trials = parse_count(v).map_err(bad)?,
            "bootstrap" => self.bootstrap = parse_count(v).map_err(bad)?,
            "paired" => self.paired = parse_bool(v).map_err(bad)?,
            _ => {
                return Err(CliError::UnknownKey {
                    origin: entry.origin.clone(),
                    key: entry.key.clone(),
                })
            }
        }
        Ok(())
    }

    /// Defaults, then `text`, then `flags`.
    pub fn resolve(text: Option<&str>, flags: &[Entry]) -> Result<Self> {
        let mut c = Self::default();
        if let Some(t) = text {
            for e in tokenize(t)? {
                c.apply(&e)?;
            }
        }
        for e in flags {
            c.apply(e)?;
        }
        Ok(c)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::resolve(Some(text), &[])
    }

    pub fn grid_values(&self) -> Vec<f64> {
        // validated on assignment; the default is well-formed
        parse_grid(&self.grid).unwrap_or_default()
    }

    pub fn echo(&self) -> ConfigEcho {
        ConfigEcho {
            subcommand: self.command.map(|c| c.name().to_owned()),
            set: self.set.as_ref().map(ToString::to_string),
            distribution: self.distribution.to_string(),
            replicates: self.replicates,
            seed: format!("{:#018x}", self.seed),
            beta: self.beta.map(|b| match b {
                Beta::Auto => "auto".to_owned(),
                Beta::Fixed(v) => v.to_string(),
            }),
            output_dir: self.output_dir.display().to_string(),
            format: match self.format {
                Format::Csv => "csv",
                Format::Json => "json",
                Format::Both => "both",
            },
            grid: self.grid.clone(),
            sizes: self.sizes.clone(),
            order: self.order,
            bound: self.bound,
            trials: self.trials,
            bootstrap: self.bootstrap,
            paired: self.paired,
        }
    }
}

/// The resolved configuration as written into result records.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub subcommand: Option<String>,
    pub set: Option<String>,
    pub distribution: String,
    pub replicates: usize,
    pub seed: String,
    pub beta: Option<String>,
    pub output_dir: String,
    pub format: &'static str,
    pub grid: String,
    pub sizes: Option<Vec<usize>>,
    pub order: usize,
    pub bound: Option<f64>,
    pub trials: usize,
    pub bootstrap: usize,
    pub paired: bool,
}
