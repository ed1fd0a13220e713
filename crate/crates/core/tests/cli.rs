use std::path::Path;
use std::process::{Command, Output};

use spincool::config::{bundled_tce, TCE_CONFIG};
use spincool::schedule::{run_schedule, Bindings, Mode};

fn spincool(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spincool"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn field(text: &str, key: &str) -> f64 {
    let prefix = format!("{key}: ");
    text.lines()
        .find_map(|l| l.strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("no {key} in output:\n{text}"))
        .parse()
        .unwrap()
}

#[test]
fn simulate_default_config() {
    let out = spincool(&["simulate"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("mode: physical"));
    assert!((field(&text, "ic_final") - 30.2325).abs() < 1e-3);
    assert!(text.contains("bypass: true"));
}

#[test]
fn simulate_ideal_mode() {
    let out = spincool(&["simulate", "--ideal"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("mode: ideal"));
    assert!((field(&text, "ic_final") - 47.4368).abs() < 1e-3);
}

#[test]
fn zero_delays_do_not_bypass() {
    let out = spincool(&["simulate", "--t1", "0", "--t2", "0"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("bypass: false"));
    assert!(field(&text, "ic_final") <= field(&text, "ic_initial") + 1e-9);
}

#[test]
fn trace_csv_is_reproducible_and_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let out = spincool(&["simulate", "--out", p.to_str().unwrap()]);
        assert!(out.status.success());
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let (m, s) = bundled_tce();
    let trace = run_schedule(
        &m,
        &s,
        &Bindings::new(),
        m.equilibrium_state().into(),
        Mode::Physical,
    )
    .unwrap();
    assert_eq!(text, trace.to_csv());
    assert!(
        text.starts_with("step_index,step_kind,elapsed_s,bias_C1,bias_C2,bias_H,ic,entropy_bits\n")
    );
    assert_eq!(text.lines().count(), 1 + 1 + s.steps().len());
}

#[test]
fn optimize_single_cell_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("surface.csv");
    let out = spincool(&[
        "optimize",
        "--grid",
        "8.25:8.25:0.05",
        "--grid-t2",
        "9.6:9.6:0.05",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout(&out);
    assert_eq!(field(&text, "cells"), 1.0);
    let csv = std::fs::read_to_string(&path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t1_s,t2_s,ic"));
    let row = lines.next().unwrap();
    assert!(row.starts_with("8.250000,9.600000,"));
    assert!(lines.next().is_none());
    let ic: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
    assert!((ic - field(&text, "max_ic")).abs() < 1e-6);
}

#[test]
fn optimize_rejects_step_larger_than_range() {
    let out = spincool(&["optimize", "--grid", "0:1:2"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("exceeds the range"), "{err}");
}

#[test]
fn bounds_reports_every_spin() {
    let out = spincool(&["bounds"]);
    assert!(out.status.success());
    let text = stdout(&out);
    for name in ["C1", "C2", "H"] {
        assert!(text.contains(&format!("sorensen_bound[{name}]")));
    }
    let ic = field(&text, "ic_equilibrium");
    assert!((field(&text, "shannon_single_spin_limit") - ic.sqrt()).abs() < 1e-6);
}

#[test]
fn report_with_observed_values() {
    let out = spincool(&["report", "--observed", "2.965,2.602,3.734"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!((field(&text, "ic_observed") - 29.504385).abs() < 1e-6);

    let out = spincool(&["report", "--observed", "1,2"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn config_errors_exit_with_config_code() {
    let missing = spincool(&["simulate", "--config", "/definitely/not/here.toml"]);
    assert_eq!(missing.status.code(), Some(3));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(
        &bad,
        TCE_CONFIG.replace("temperature_K = 295.7", "temperature_K = -1.0"),
    )
    .unwrap();
    let out = spincool(&["simulate", "--config", bad.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(!out.stderr.is_empty());
}

#[test]
fn custom_config_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("custom.toml");
    let text = TCE_CONFIG
        .replace("t1 = 8.25", "t1 = 0.0")
        .replace("t2 = 9.6", "t2 = 0.0");
    assert_ne!(text, TCE_CONFIG);
    std::fs::write(&path, text).unwrap();
    let out = spincool(&["simulate", "--config", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("bypass: false"));
    assert!(Path::new(&path).exists());
}
