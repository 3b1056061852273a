use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn evoflight(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evoflight"))
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

/// Writes the named fixture configuration into `dir` and returns its path.
fn fixture_config(dir: &Path, name: &str) -> PathBuf {
    let out = dir.join("fixtures");
    let o = evoflight(&[
        "fixtures",
        "--write",
        "--name",
        name,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    out.join(format!("{name}.json"))
}

fn with_alpha(path: &Path, alpha: f64) -> PathBuf {
    let mut v: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    v["alpha"] = alpha.into();
    let p = path.with_file_name(format!("alpha-{alpha}.json"));
    fs::write(&p, serde_json::to_string(&v).unwrap()).unwrap();
    p
}

#[test]
fn limit_writes_log_and_exponents() {
    let dir = TempDir::new().unwrap();
    let cfg = fixture_config(dir.path(), "cycle");
    let out = dir.path().join("limit");
    let o = evoflight(&[
        "limit",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--horizon",
        "3",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let log: Value =
        serde_json::from_str(&fs::read_to_string(out.join("events.json")).unwrap()).unwrap();
    assert!(log.is_object());
    let csv = fs::read_to_string(out.join("beta.csv")).unwrap();
    assert!(csv.lines().next().unwrap().starts_with('t'));
    assert!(csv.lines().count() > 2);
}

#[test]
fn integer_alpha_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    let cfg = with_alpha(&fixture_config(dir.path(), "cycle"), 2.0);
    let out = dir.path().join("limit");
    let o = evoflight(&[
        "limit",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--horizon",
        "2",
    ]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn malformed_config_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"traits": ["a"], "birth": {"a": "two"}}"#).unwrap();
    let o = evoflight(&[
        "limit",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn simulate_reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = fixture_config(dir.path(), "cycle");
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = evoflight(&[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--k",
            "200",
            "--seeds",
            "2",
            "--horizon",
            "0.5",
            "--seed",
            "7",
            "--parallelism",
            "2",
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let a = run("a");
    let b = run("b");
    for f in ["trajectory_000.csv", "trajectory_001.csv", "summary.json"] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn simulate_truncation_exits_4() {
    let dir = TempDir::new().unwrap();
    let cfg = fixture_config(dir.path(), "cycle");
    let out = dir.path().join("sim");
    let o = evoflight(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--k",
        "1000",
        "--horizon",
        "1",
        "--max-events",
        "50",
    ]);
    assert_eq!(code(&o), 4);
}

#[test]
fn compare_refuses_foreign_event_log() {
    let dir = TempDir::new().unwrap();
    let cfg = fixture_config(dir.path(), "cycle");
    let other = with_alpha(&cfg, 2.7);
    let limit_out = dir.path().join("limit");
    let o = evoflight(&[
        "limit",
        "--config",
        other.to_str().unwrap(),
        "--out",
        limit_out.to_str().unwrap(),
        "--horizon",
        "2",
    ]);
    assert_eq!(code(&o), 0);
    let o = evoflight(&[
        "compare",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("cmp").to_str().unwrap(),
        "--k-list",
        "100",
        "--seeds",
        "1",
        "--limit-log",
        limit_out.join("events.json").to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn compare_writes_report() {
    let dir = TempDir::new().unwrap();
    let cfg = fixture_config(dir.path(), "cycle");
    let out = dir.path().join("cmp");
    let o = evoflight(&[
        "compare",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--k-list",
        "100,300",
        "--seeds",
        "2",
        "--horizon",
        "1",
        "--parallelism",
        "1",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(r["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn valley_rates_and_chain() {
    let dir = TempDir::new().unwrap();
    let cfg = fixture_config(dir.path(), "valley-2");
    let out = dir.path().join("valley");
    let o = evoflight(&[
        "valley",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--ctmc-horizon",
        "5",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("rates.json").exists());
    assert!(
        fs::read_to_string(out.join("ctmc.csv"))
            .unwrap()
            .lines()
            .count()
            >= 2
    );
}

#[test]
fn valley_without_section_is_refused() {
    let dir = TempDir::new().unwrap();
    let cfg = fixture_config(dir.path(), "cycle");
    let o = evoflight(&[
        "valley",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn unknown_fixture_is_refused() {
    let dir = TempDir::new().unwrap();
    let o = evoflight(&[
        "fixtures",
        "--name",
        "nope",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn bpi_check_writes_report() {
    let dir = TempDir::new().unwrap();
    let o = evoflight(&[
        "bpi-check",
        "--replicas",
        "3",
        "--k",
        "1e4",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(matches!(code(&o), 0 | 1));
    let r: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("bpi.json")).unwrap()).unwrap();
    assert_eq!(r["replicas"], 3);
}

#[test]
fn accelerating_cycle_warns_when_budget_runs_out() {
    let dir = TempDir::new().unwrap();
    let cfg = fixture_config(dir.path(), "cycle");
    let out = dir.path().join("limit");
    let o = evoflight(&[
        "limit",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--max-events",
        "50",
    ]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("event budget"));
}
