use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command as Process;

use supremum::config::Command;
use supremum::{run, RunConfig};

/// Small-budget configuration per subcommand, shared by the golden and
/// determinism tests.
const CASES: [(&str, &str); 10] = [
    ("estimate", "subcommand=estimate set=basis:n=5 replicates=2000 beta=auto bootstrap=200"),
    ("bounds", "subcommand=bounds set=diagcube:n=6,alpha=0.5,k=3 replicates=1000 grid=log:0.5:20:5"),
    ("sudakov", "subcommand=sudakov set=diagcube:n=5,alpha=0.5,k=3 replicates=500"),
    ("laplace", "subcommand=laplace sizes=2^2..2^4 replicates=500"),
    ("sk", "subcommand=sk sizes=3..5 replicates=500"),
    ("tensor", "subcommand=tensor sizes=4..6 order=2 replicates=500"),
    ("phase-curves", "subcommand=phase-curves grid=log:1:10:6"),
    ("verify-softmax", "subcommand=verify-softmax trials=20"),
    ("verify-gibbs", "subcommand=verify-gibbs trials=20"),
    ("verify-stein", "subcommand=verify-stein trials=10"),
];

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn csv_bodies(text: &str) -> Vec<(String, String)> {
    let record = run(&RunConfig::parse(text).unwrap()).unwrap();
    record.all_tables().iter().map(|t| (t.name.clone(), t.to_csv())).collect()
}

#[test]
fn every_subcommand_has_a_case() {
    for c in Command::ALL {
        assert!(CASES.iter().any(|(name, _)| *name == c.name()), "{c}");
    }
}

#[test]
fn golden_csv_files() {
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    let dir = golden_dir();
    if update {
        fs::create_dir_all(&dir).unwrap();
    }
    for (name, text) in CASES {
        for (table, body) in csv_bodies(text) {
            let path = dir.join(format!("{table}.csv"));
            if update {
                fs::write(&path, &body).unwrap();
                continue;
            }
            let want = fs::read_to_string(&path)
                .unwrap_or_else(|e| panic!("{name}: {}: {e} (set UPDATE_GOLDEN=1)", path.display()));
            assert_eq!(body, want, "{name}: table {table} differs from {}", path.display());
        }
    }
}

#[test]
fn reruns_are_byte_identical() {
    for (name, text) in CASES {
        assert_eq!(csv_bodies(text), csv_bodies(text), "{name}");
    }
}

#[test]
fn seed_changes_monte_carlo_output() {
    let a = csv_bodies("subcommand=estimate set=basis:n=5 replicates=500 seed=1");
    let b = csv_bodies("subcommand=estimate set=basis:n=5 replicates=500 seed=2");
    assert_ne!(a[0].1, b[0].1);
}

#[test]
fn estimate_basis3_within_five_errors() {
    let r = run(&RunConfig::parse("subcommand=estimate set=basis:n=3").unwrap()).unwrap();
    assert!(r.passed());
    let t = r.table("estimate").unwrap();
    assert_eq!(t.headers[4], "mean");
    let mean = match t.rows[0][4] {
        supremum::table::Cell::Num(v) => v,
        ref c => panic!("{c:?}"),
    };
    let se = match t.rows[0][5] {
        supremum::table::Cell::Num(v) => v,
        ref c => panic!("{c:?}"),
    };
    assert!((mean - 0.75).abs() <= 5.0 * se);
}

fn binary() -> Process {
    Process::new(env!("CARGO_BIN_EXE_supremum"))
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();

    let ok = binary()
        .args(["phase-curves", "--output-dir", out, "--format", "csv"])
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(dir.path().join("phase_curves.csv").exists());
    assert!(!dir.path().join("phase_curves.json").exists());

    let failing = binary()
        .args(["sk", "--sizes", "4,5", "--replicates", "2000", "--output-dir", out])
        .output()
        .unwrap();
    assert_eq!(failing.status.code(), Some(2));
    assert!(dir.path().join("sk.csv").exists(), "results are emitted on assertion failure");
    assert!(dir.path().join("sk_record.json").exists());

    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "subcommand=estimate\nfoo=1\n").unwrap();
    let bad = binary().args(["--config", cfg.to_str().unwrap()]).output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("unknown key `foo`"));

    let usage = binary().args(["verify", "--output-dir", out]).output().unwrap();
    assert_eq!(usage.status.code(), Some(1));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        format!(
            "# sudakov on a small set\nsubcommand=sudakov\nset=basis:n=4\nformat=json\noutput_dir={}\n",
            dir.path().join("from-file").display()
        ),
    )
    .unwrap();
    let flag_dir = dir.path().join("from-flag");
    let out = binary()
        .args(["--config", cfg.to_str().unwrap(), "--format", "both", "--output-dir"])
        .arg(&flag_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(flag_dir.join("sudakov.csv").exists());
    assert!(flag_dir.join("sudakov.json").exists());
    assert!(!dir.path().join("from-file").exists());

    let record: serde_json::Value =
        serde_json::from_slice(&fs::read(flag_dir.join("sudakov_record.json")).unwrap()).unwrap();
    assert_eq!(record["config"]["set"], "basis:n=4");
    assert_eq!(record["config"]["seed"], "0x0000000000c0ffee");
    assert_eq!(record["passed"], true);
}

#[test]
fn csv_and_json_carry_identical_values() {
    let dir = tempfile::tempdir().unwrap();
    let record = run(&RunConfig::parse("subcommand=estimate set=basis:n=4 replicates=300").unwrap()).unwrap();
    supremum::emit(&record, supremum::Format::Both, dir.path()).unwrap();
    let json: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("estimate.json")).unwrap()).unwrap();
    let mut reader = csv::Reader::from_path(dir.path().join("estimate.csv")).unwrap();
    let headers = reader.headers().unwrap().clone();
    let row = reader.records().next().unwrap().unwrap();
    for (k, (h, v)) in headers.iter().zip(row.iter()).enumerate() {
        assert_eq!(json["headers"][k], h);
        let j = &json["rows"][0][k];
        match j {
            serde_json::Value::Number(n) if v.contains('e') => {
                assert_eq!(n.as_f64().unwrap(), v.parse::<f64>().unwrap(), "{h}")
            }
            serde_json::Value::Number(n) => assert_eq!(n.to_string(), v, "{h}"),
            serde_json::Value::String(s) => assert_eq!(s, v, "{h}"),
            serde_json::Value::Null => assert_eq!(v, "", "{h}"),
            serde_json::Value::Bool(b) => assert_eq!(b.to_string(), v, "{h}"),
            other => panic!("{h}: {other:?}"),
        }
    }
}
