use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use supremum::config::Entry;
use supremum::{emit, run, CliError, RunConfig};

/// Expected suprema of canonical processes: estimates, comparison bounds and
/// identity checks.
///
/// Subcommands: estimate, bounds, sudakov, laplace, sk, tensor, phase-curves,
/// verify {softmax|stein|gibbs}.
#[derive(Debug, Parser)]
#[command(name = "supremum", version)]
struct Args {
    /// Subcommand; may also come from the config file.
    subcommand: Option<String>,
    /// Suite for `verify`.
    target: Option<String>,
    /// Flat `key=value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Index set descriptor, e.g. `basis:n=8` or `diagcube:n=16,alpha=0.25,k=6`.
    #[arg(long)]
    set: Option<String>,
    #[arg(long)]
    distribution: Option<String>,
    #[arg(long)]
    replicates: Option<String>,
    /// Master seed, decimal or 0x hex.
    #[arg(long)]
    seed: Option<String>,
    /// Inverse temperature, or `auto`.
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    output_dir: Option<String>,
    /// csv, json or both.
    #[arg(long)]
    format: Option<String>,
    /// u grid: `a,b,c` or `log:lo:hi:count`.
    #[arg(long)]
    grid: Option<String>,
    /// `a,b,c`, `lo..hi` or `2^lo..2^hi`.
    #[arg(long)]
    sizes: Option<String>,
    /// Tensor order m.
    #[arg(long)]
    order: Option<String>,
    /// Almost-sure coordinate bound M.
    #[arg(long)]
    bound: Option<String>,
    /// Random instances per verify check.
    #[arg(long)]
    trials: Option<String>,
    /// Bootstrap resamples (0 disables).
    #[arg(long)]
    bootstrap: Option<String>,
    /// Couple the compared laws through shared uniforms.
    #[arg(long)]
    paired: bool,
}

impl Args {
    fn entries(&self) -> Result<Vec<Entry>, CliError> {
        let mut out = Vec::new();
        let mut push = |key: &str, value: &str| {
            out.push(Entry {
                origin: format!("flag --{}", key.replace('_', "-")),
                key: key.to_owned(),
                value: value.to_owned(),
            })
        };
        match (self.subcommand.as_deref(), self.target.as_deref()) {
            (Some("verify"), Some(t)) => push("subcommand", &format!("verify-{t}")),
            (Some("verify"), None) => {
                return Err(CliError::InvalidValue {
                    origin: "argument".into(),
                    key: "subcommand".into(),
                    reason: "verify needs one of softmax, stein, gibbs".into(),
                })
            }
            (Some(s), None) => push("subcommand", s),
            (Some(s), Some(t)) => {
                return Err(CliError::InvalidValue {
                    origin: "argument".into(),
                    key: "subcommand".into(),
                    reason: format!("`{s}` takes no target, found `{t}`"),
                })
            }
            (None, _) => {}
        }
        let flags = [
            ("set", &self.set),
            ("distribution", &self.distribution),
            ("replicates", &self.replicates),
            ("seed", &self.seed),
            ("beta", &self.beta),
            ("output_dir", &self.output_dir),
            ("format", &self.format),
            ("grid", &self.grid),
            ("sizes", &self.sizes),
            ("order", &self.order),
            ("bound", &self.bound),
            ("trials", &self.trials),
            ("bootstrap", &self.bootstrap),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                push(key, v);
            }
        }
        if self.paired {
            push("paired", "true");
        }
        Ok(out)
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn execute(args: &Args) -> Result<u8, CliError> {
    let text = match &args.config {
        Some(path) => Some(std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?),
        None => None,
    };
    let config = RunConfig::resolve(text.as_deref(), &args.entries()?)?;
    let record = run(&config)?;
    let paths = emit(&record, config.format, &config.output_dir)?;
    for a in &record.assertions {
        let status = if a.passed { "PASS" } else { "FAIL" };
        eprintln!("{status} {}: {}", a.name, a.detail);
    }
    for p in paths {
        println!("{}", p.display());
    }
    Ok(record.exit_code() as u8)
}
