use std::path::Path;
use std::process::Command;

use osccomp::cli::{main_with, EXIT_BLOWUP, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_IO, EXIT_OK};
use osccomp::sim::{read_trace, summarize};

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("osccomp").chain(args.iter().copied());
    let code = main_with(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn line_value(text: &str, label: &str) -> f64 {
    let line = text
        .lines()
        .find(|l| l.starts_with(label))
        .unwrap_or_else(|| panic!("no `{label}` line in:\n{text}"));
    line[label.len()..].split_whitespace().next().unwrap().parse().unwrap()
}

#[test]
fn run_writes_trace_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, stdout, _) = run(&["run", "--scenario", "pi-plus-power", "--out", out]);
    assert_eq!(code, EXIT_OK);
    let trace = read_trace(&dir.path().join("pi-plus-power.csv")).unwrap();
    assert_eq!(trace.rows.len(), 30_000);
    let written = std::fs::read_to_string(dir.path().join("pi-plus-power.summary.txt")).unwrap();
    // the summary is recomputable from the trace file alone
    assert_eq!(written, summarize(&trace).to_string());
    assert!(stdout.starts_with(&written));
}

#[test]
fn long_pi_only_run_truncates() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, stdout, _) = run(&["run", "--scenario", "pi-unstable", "--duration", "30", "--out", out]);
    assert_eq!(code, EXIT_BLOWUP);
    assert!(stdout.contains("numerical blowup"));
    let trace = read_trace(&dir.path().join("pi-unstable.csv")).unwrap();
    let at = trace.truncated_at().expect("truncation recorded");
    assert!(at < 30.0 && !trace.rows.is_empty());
    assert!(trace.meta("config.duration").unwrap().starts_with("30"));
}

#[test]
fn overgain_carries_warning() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, stdout, _) = run(&["run", "--set", "powerctl.K=5.0", "--duration", "6", "--out", out]);
    assert_eq!(code, EXIT_OK);
    assert!(stdout.contains("warning"), "{stdout}");
    assert!(stdout.contains("K = 5"));
    let trace = read_trace(&dir.path().join("pi-plus-power.csv")).unwrap();
    assert_eq!(trace.meta_f64("config.powerctl.K"), Some(5.0));
}

#[test]
fn overrides_and_seed_are_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let args = [
        "run", "--scenario", "pi-unstable", "--duration", "1", "--seed", "99", "--set",
        "estimator.gamma1=2e5", "--out", out,
    ];
    assert_eq!(run(&args).0, EXIT_OK);
    let trace = read_trace(&dir.path().join("pi-unstable.csv")).unwrap();
    assert_eq!(trace.meta_f64("config.noise.seed"), Some(99.0));
    assert_eq!(trace.meta_f64("config.estimator.gamma1"), Some(2e5));
}

#[test]
fn config_file_errors_name_key_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "duration = 2.0\n\n[estimator]\ntau = 0.075\ngama1 = 1.0\n").unwrap();
    let (code, _, err) = run(&["run", "--config", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, EXIT_CONFIG);
    assert!(err.contains("estimator.gama1"), "{err}");
    assert!(err.contains("line 5"), "{err}");

    std::fs::write(&path, "[powerctl]\nK = \"big\"\n").unwrap();
    let (code, _, err) = run(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_CONFIG);
    assert!(err.contains("powerctl.K") && err.contains("line 2"), "{err}");
}

#[test]
fn bad_scenario_and_missing_file() {
    let (code, _, err) = run(&["run", "--scenario", "nope"]);
    assert_eq!(code, EXIT_CONFIG);
    assert!(err.contains("scenario"));
    let (code, _, _) = run(&["run", "--config", "/nonexistent/cfg.toml"]);
    assert_eq!(code, EXIT_IO);
    let (code, _, _) = run(&["run", "--set", "no-equals-sign"]);
    assert_eq!(code, EXIT_CONFIG);
}

#[test]
fn tune_tau_interval_and_point() {
    let (code, out, _) = run(&["tune-tau", "--omega-min", "5", "--omega-max", "10", "--omega", "7"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("[0.3142, 0.6283]"), "{out}");

    let (code, out, _) = run(&["tune-tau"]);
    assert_eq!(code, EXIT_OK);
    let omega_dom = 16.269_2;
    assert!(out.contains(&format!("{:.4} s", std::f64::consts::PI / omega_dom)), "{out}");

    let (code, _, err) = run(&["tune-tau", "--omega-min", "10", "--omega-max", "5"]);
    assert_eq!(code, EXIT_CONFIG);
    assert!(!err.is_empty());
}

#[test]
fn gain_bound_window() {
    let (code, out, _) = run(&["gain-bound"]);
    assert_eq!(code, EXIT_OK);
    let k_max = line_value(&out, "K_max");
    assert!((k_max - 3.7202).abs() < 1e-3, "{out}");

    let (code, out, _) = run(&["gain-bound", "--K", "1.0"]);
    assert_eq!(code, EXIT_CHECK_FAILED);
    assert!(out.contains("lower bound"));

    let (code, out, _) = run(&["gain-bound", "--K", "4.24"]);
    assert_eq!(code, EXIT_CHECK_FAILED);
    assert!(out.contains("upper bound"));

    // a unit first-order lag at its corner has |G| = 1/sqrt(2)
    let (code, out, _) = run(&["gain-bound", "--num", "1", "--den", "1,1", "--omega", "1", "--K", "1.2"]);
    assert_eq!(code, EXIT_OK);
    assert!((line_value(&out, "K_max") - 2f64.sqrt()).abs() < 1e-6);

    let (code, _, _) = run(&["gain-bound", "--num", "1", "--den", "1,0,1", "--omega", "1"]);
    assert_eq!(code, EXIT_CONFIG);
}

#[test]
fn sweep_k_grid_point_and_file() {
    let (code, out, _) = run(&["sweep-k", "--point", "0"]);
    assert_eq!(code, EXIT_OK);
    let ratio: f64 = out.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((ratio - 1.0).abs() < 1e-9);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let (code, out, _) = run(&["sweep-k", "--from", "0.1", "--to", "0.2", "--step", "0.05", "--out", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert!(out.starts_with("argmin k"));
    let table = std::fs::read_to_string(&path).unwrap();
    assert_eq!(table.lines().count(), 4);

    let (code, _, _) = run(&["sweep-k", "--from", "0.5", "--to", "0.1"]);
    assert_eq!(code, EXIT_CONFIG);
}

#[test]
fn binary_exit_codes() {
    let bin = Path::new(env!("CARGO_BIN_EXE_osccomp"));
    let status = Command::new(bin).args(["gain-bound", "--K", "2.4"]).status().unwrap();
    assert_eq!(status.code(), Some(EXIT_OK));
    let status = Command::new(bin).args(["gain-bound", "--K", "1.0"]).output().unwrap();
    assert_eq!(status.status.code(), Some(EXIT_CHECK_FAILED));
    let status = Command::new(bin).arg("frobnicate").output().unwrap();
    assert_eq!(status.status.code(), Some(EXIT_CONFIG));
    assert!(!status.stderr.is_empty());
}
