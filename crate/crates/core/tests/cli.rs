use std::path::{Path, PathBuf};
use std::process::Command;

use spatial_qops::cli::{RunConfig, OUT_ENV};

const BIN: &str = env!("CARGO_BIN_EXE_spatial-qops");

fn scratch(name: &str) -> PathBuf {
    let p = std::env::temp_dir().join(format!("sq-cli-it-{}-{name}", std::process::id()));
    std::fs::remove_dir_all(&p).ok();
    p
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run(args: &[&str]) -> std::process::Output {
    Command::new(BIN).args(args).env_remove(OUT_ENV).output().unwrap()
}

#[test]
fn shipped_manifests_are_valid() {
    for entry in std::fs::read_dir(config("")).unwrap() {
        let path = entry.unwrap().path();
        let cfg = RunConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        cfg.validate().unwrap();
    }
}

#[test]
fn shor_manifest_runs_and_reproduces() {
    let (a, b) = (scratch("shor-a"), scratch("shor-b"));
    for dir in [&a, &b] {
        let out = run(&["shor", "--config", config("shor.json").to_str().unwrap(), "--out", dir.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for f in ["register1.csv", "joint_distribution.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap());
    }
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(a.join("shor_report.json")).unwrap()).unwrap();
    assert_eq!(report["base"], 7);
    assert_eq!(report["period"], 4);
    std::fs::remove_dir_all(&a).ok();
    std::fs::remove_dir_all(&b).ok();
}

#[test]
fn seeded_tomography_is_byte_reproducible() {
    let dir = scratch("tomo");
    let mut csvs = Vec::new();
    for k in 0..2 {
        let d = dir.join(k.to_string());
        let out = run(&["tomo", "--n", "5", "--seed", "9", "--out", d.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        csvs.push(std::fs::read(d.join("tomography_counts.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
    let other = dir.join("other");
    run(&["tomo", "--n", "5", "--seed", "10", "--out", other.to_str().unwrap()]);
    assert_ne!(std::fs::read(other.join("tomography_counts.csv")).unwrap(), csvs[0]);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn output_directory_comes_from_the_environment() {
    let dir = scratch("env");
    let out = Command::new(BIN).args(["bell", "--n", "3"]).env(OUT_ENV, &dir).output().unwrap();
    assert!(out.status.success());
    assert!(dir.join("bell_report.json").exists());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn errors_exit_nonzero() {
    let dir = scratch("err");
    let d = dir.to_str().unwrap();
    // manifest written for another command
    assert!(!run(&["bell", "--config", config("shor.json").to_str().unwrap(), "--out", d]).status.success());
    assert!(!run(&["sic", "--config", "/nonexistent.json", "--out", d]).status.success());
    // base shares a factor with the modulus
    let bad = dir.join("bad.json");
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(&bad, r#"{"shor": {"register": 16, "modulus": 15, "base": 5}}"#).unwrap();
    assert!(!run(&["shor", "--config", bad.to_str().unwrap(), "--out", d]).status.success());
    std::fs::remove_dir_all(&dir).ok();
}
