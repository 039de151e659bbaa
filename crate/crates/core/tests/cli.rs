//! Runs the `ksync` binary end to end.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ksync::harness::{read_csv, CSV_HEADER};

fn ksync(args: &[&str], config: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ksync"));
    cmd.args(args);
    if let Some(c) = config {
        cmd.arg("--config").arg(c);
    }
    cmd.output().unwrap()
}

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, json).unwrap();
    path
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

const SETUP1: &str = r#"{"mode": "setup1", "n": 60, "k": 2, "p": [0.4, 0.3],
    "lambdas": [0.5, 1.0], "trials_angles": 2, "trials_graphs": 2, "seed": 3}"#;

#[test]
fn sweep_writes_csv_meta_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.json", SETUP1);
    let out = dir.path().join("s.csv");
    let svg = dir.path().join("s.svg");
    let o = ksync(
        &[
            "sweep",
            "--out",
            out.to_str().unwrap(),
            "--plot",
            svg.to_str().unwrap(),
        ],
        Some(&cfg),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
    assert_eq!(read_csv(text.as_bytes()).unwrap().len(), 2 * 2);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("s.csv.meta")).unwrap())
            .unwrap();
    assert_eq!(meta["seed"], 3);
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
}

#[test]
fn sweep_to_stdout_and_seed_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.json", SETUP1);
    let a = ksync(&["sweep"], Some(&cfg));
    let b = ksync(&["sweep", "--seed", "3"], Some(&cfg));
    let c = ksync(&["sweep", "--seed", "4"], Some(&cfg));
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn compare_runs_every_solver() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"mode": "setup2", "n": 60, "k": 2, "gamma": 0.05, "etas": [0.2, 0.97], "lambda": 0.8,
            "solvers": ["EIG-H", "EIG-R", "SDP-BM"], "seed": 1}"#,
    );
    let out = dir.path().join("c.csv");
    let o = ksync(&["compare", "--out", out.to_str().unwrap()], Some(&cfg));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_csv(std::fs::read(&out).unwrap().as_slice()).unwrap();
    // eta = 0.97 leaves a non-positive p_2 and is skipped
    assert_eq!(rows.len(), 3 * 2);
    assert!(rows
        .iter()
        .all(|r| r.mode == "compare" && r.gamma == Some(0.05)));
    let meta = std::fs::read_to_string(dir.path().join("c.csv.meta")).unwrap();
    assert!(meta.contains("\"skipped\"") && meta.contains("0.97"));
}

#[test]
fn simulate_and_theory_print_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sim.json",
        r#"{"mode": "setup1", "n": 40, "k": 1, "p": [1.0], "lambdas": [1.0],
            "solvers": ["EIG-H", "SDP-BM"]}"#,
    );
    let o = ksync(&["simulate"], Some(&cfg));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["solvers"].as_array().unwrap().len(), 2);
    assert!((v["solvers"][0]["matched_corr"][0].as_f64().unwrap() - 1.0).abs() < 1e-8);

    let cfg = write_config(
        dir.path(),
        "th.json",
        r#"{"mode": "theory", "n": 500, "k": 2, "p": [0.3, 0.2], "lambda": 1.0, "delta": 0.1}"#,
    );
    let o = ksync(&["theory"], Some(&cfg));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["psi"][0].as_f64().unwrap() - 0.2).abs() < 1e-12);
}

#[test]
fn disentangle_writes_subgraphs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "d.json",
        r#"{"mode": "disentangle", "n": 80, "k": 2, "p": [0.45, 0.35], "lambda": 1.0,
            "iterations": 3, "seed": 2}"#,
    );
    let out = dir.path().join("d.csv");
    let o = ksync(&["disentangle", "--out", out.to_str().unwrap()], Some(&cfg));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        std::fs::read_to_string(&out).unwrap().lines().count(),
        1 + 3 * 2
    );
    for suffix in [".G1.txt", ".G2.txt", ".W.txt"] {
        assert!(
            dir.path().join(format!("d.csv{suffix}")).exists(),
            "{suffix}"
        );
    }
}

#[test]
fn grp_runs_without_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.csv");
    let o = ksync(&["grp", "--out", out.to_str().unwrap()], None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert!(row[2].parse::<f64>().unwrap() < 1e-6);
    for suffix in [
        ".truth.X.csv",
        ".truth.Y.csv",
        ".sigma0.X.csv",
        ".sigma0.Y.csv",
    ] {
        let p = dir.path().join(format!("g.csv{suffix}"));
        let pts = std::fs::read_to_string(&p).unwrap();
        assert_eq!(pts.lines().next().unwrap(), "id,x,y");
        assert_eq!(pts.lines().count(), 1 + 144);
    }
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write_config(dir.path(), "u.json", r#"{"mode": "setup1", "colour": 1}"#);
    assert_eq!(code(&ksync(&["sweep"], Some(&unknown))), 2);
    let empty = write_config(
        dir.path(),
        "e.json",
        r#"{"mode": "setup1", "n": 10, "k": 1, "p": [1.0]}"#,
    );
    let o = ksync(&["sweep"], Some(&empty));
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("lambdas"));
    assert_eq!(code(&ksync(&["sweep"], None)), 2);
    assert_eq!(
        code(&ksync(&["theory"], Some(&dir.path().join("missing.json")))),
        2
    );
    let wrong_mode = write_config(dir.path(), "w.json", SETUP1);
    assert_eq!(code(&ksync(&["disentangle"], Some(&wrong_mode))), 2);
}

#[test]
fn runtime_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "d.json",
        &format!(
            r#"{{"mode": "disentangle", "k": 2, "bad_fractions": [0.1, 0.1], "graph_file": "{}"}}"#,
            dir.path().join("absent.txt").display()
        ),
    );
    let o = ksync(&["disentangle"], Some(&cfg));
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn shipped_configs_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        let cfg = ksync::harness::ExperimentConfig::from_json(&text).unwrap();
        cfg.validate()
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        seen += 1;
    }
    assert_eq!(seen, 6);
}
