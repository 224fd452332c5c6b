use std::path::Path;
use std::process::{Command, Output};

fn dynslam(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dynslam")).args(args).output().expect("binary runs")
}

fn short_config(dir: &Path, frames: u32) -> String {
    let preset = include_str!("../../core/presets/desk-2obj.toml");
    let text = preset.replace("num_frames = 20", &format!("num_frames = {frames}"));
    let path = dir.join("exp.toml");
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn presets_are_listed() {
    let out = dynslam(&["presets"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l == "desk-2obj"));
    assert!(text.lines().any(|l| l == "continuous-visibility-4obj"));
}

#[test]
fn run_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path(), 6);
    let out_dir = dir.path().join("out");
    let out = dynslam(&["run", "--config", &cfg, "--solver", "batch", "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let metrics = std::fs::read_to_string(out_dir.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 2);
    assert!(metrics.lines().nth(1).unwrap().contains(",Hybrid,"));
    assert!(String::from_utf8(out.stdout).unwrap().contains("Hybrid"));
}

#[test]
fn suite_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path(), 6);
    let mut runs = Vec::new();
    for name in ["a", "b"] {
        let out_dir = dir.path().join(name);
        let out = dynslam(&["suite", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        runs.push(std::fs::read_to_string(out_dir.join("metrics.csv")).unwrap());
    }
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[0].lines().count(), 6);
}

#[test]
fn parallel_baseline_is_rejected() {
    let out = dynslam(&["run", "--preset", "desk-2obj", "--formulation", "baseline", "--solver", "parallel"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("hybrid"));
}

#[test]
fn missing_or_conflicting_sources_are_errors() {
    assert_eq!(dynslam(&["run"]).status.code(), Some(2));
    assert_eq!(dynslam(&["run", "--preset", "desk-2obj", "--config", "x.toml"]).status.code(), Some(2));
    assert_eq!(dynslam(&["run", "--preset", "no-such-preset"]).status.code(), Some(2));
}

#[test]
fn exhausted_budget_exits_with_a_failed_report() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = dynslam(&["run", "--preset", "desk-2obj", "--budget-mb", "0.01", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let json = std::fs::read_to_string(out_dir.join("report.json")).unwrap();
    assert!(json.contains("failed") && json.contains("budget"));
}

#[test]
fn simulate_writes_measurements_and_truth() {
    let dir = tempfile::tempdir().unwrap();
    let out = dynslam(&["simulate", "--preset", "desk-2obj", "--seed", "4", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["measurements.csv", "ground_truth.json", "scene.toml"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let scene = std::fs::read_to_string(dir.path().join("scene.toml")).unwrap();
    assert!(scene.contains("rng_seed = 4"));
    let again = tempfile::tempdir().unwrap();
    dynslam(&["simulate", "--config", dir.path().join("scene.toml").to_str().unwrap(), "--out", again.path().to_str().unwrap()]);
    assert_eq!(
        std::fs::read(dir.path().join("measurements.csv")).unwrap(),
        std::fs::read(again.path().join("measurements.csv")).unwrap()
    );
}
