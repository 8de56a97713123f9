use std::path::Path;
use std::process::{Command, Output};

use skelstop::experiment::DEFAULTS;

fn skelstop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skelstop"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn small_config(dir: &Path, k_list: &str) -> std::path::PathBuf {
    let text = DEFAULTS
        .replace("k_list = [2, 3, 4]", &format!("k_list = {k_list}"))
        .replace("train_paths = 20000", "train_paths = 2000")
        .replace("fresh_paths = 20000", "fresh_paths = 2000")
        .replace("crr_steps = 20000", "crr_steps = 2000");
    let path = dir.join("small.toml");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn plan_reports_step_counts() {
    let out = skelstop(&["plan", "--e1", "0.40", "--hurst", "0.6", "--lambda", "0.15"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("k* = 1.88"), "{text}");
    assert!(text.contains("steps = 14"), "{text}");

    let out = skelstop(&["plan", "--e1", "0.2", "--hurst", "0.6", "--lambda", "0.15"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("k* = 3.31") && text.contains("steps = 99"), "{text}");
}

#[test]
fn plan_rejects_lambda_outside_window() {
    let out = skelstop(&["plan", "--e1", "0.40", "--hurst", "0.6", "--lambda", "0.05"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn verify_passes_and_detects_corruption() {
    let good = skelstop(&["verify"]);
    assert!(good.status.success(), "{}", String::from_utf8_lossy(&good.stdout));
    assert!(!String::from_utf8_lossy(&good.stdout).contains("FAIL"));

    let bad = skelstop(&["verify", "--corrupt-norm-const"]);
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stdout).contains("FAIL"));
}

#[test]
fn defaults_round_trip_through_the_parser() {
    let out = skelstop(&["--print-defaults"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text, DEFAULTS);
    skelstop::experiment::ExperimentConfig::from_toml(&text).unwrap();
}

#[test]
fn run_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "[1, 2]");
    let mut reports = Vec::new();
    for name in ["a", "b"] {
        let out_dir = dir.path().join(name);
        let out = skelstop(&[
            "run",
            cfg.to_str().unwrap(),
            "--output-dir",
            out_dir.to_str().unwrap(),
            "--threads",
            "1",
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        for file in ["report.csv", "summary.json", "models_k1.json", "models_k2.json"] {
            assert!(out_dir.join(file).exists(), "missing {file}");
        }
        reports.push(std::fs::read(out_dir.join("report.csv")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    let csv = String::from_utf8(reports.remove(0)).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("k,eps,steps,value"));
    assert_eq!(lines.count(), 2);
}

#[test]
fn seed_override_changes_the_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "[1]");
    let read = |seed: &str, name: &str| {
        let out_dir = dir.path().join(name);
        let out = skelstop(&[
            "run",
            cfg.to_str().unwrap(),
            "--seed",
            seed,
            "--output-dir",
            out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        std::fs::read_to_string(out_dir.join("report.csv")).unwrap()
    };
    assert_ne!(read("1", "one"), read("2", "two"));
}

#[test]
fn run_rejects_bad_configs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "[]");
    let out = skelstop(&["run", cfg.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("k_list"));

    let broken = dir.path().join("broken.toml");
    std::fs::write(&broken, DEFAULTS.replace("[basis]", "[basis]\nsplines = 3")).unwrap();
    let out_dir = dir.path().join("never");
    let out = skelstop(&["run", broken.to_str().unwrap(), "--output-dir", out_dir.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(!out_dir.exists());

    assert!(!skelstop(&["run", dir.path().join("missing.toml").to_str().unwrap()]).status.success());
}
