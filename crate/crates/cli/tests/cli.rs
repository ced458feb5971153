//! End-to-end tests of the psvf binary: exit codes, report shapes, and
//! byte-level determinism.

use std::io::Write as _;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_psvf")).args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write_temp(content: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(content.as_bytes()).unwrap();
    f
}

/// Flat system with X+ = (1, 0, x1), X- = (0, 0, 1): slides then exits at the
/// fold, with closed-form junctions.
const SLIDE_EXIT_JSON: &str = r#"{
  "name": "slide_exit",
  "h": [{"exp": [0, 0, 1], "c": 1.0}],
  "x_plus": [[{"exp": [0, 0, 0], "c": 1.0}], [], [{"exp": [1, 0, 0], "c": 1.0}]],
  "x_minus": [[], [], [{"exp": [0, 0, 0], "c": 1.0}]]
}"#;

#[test]
fn classify_family_reports_verdict() {
    let out = run(&["classify", "--family", "swallowtail", "--param", "lambda=0"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["verdict"], "Xi1_3");
    assert_eq!(v["system"], "swallowtail");
    assert_eq!(v["degenerate"], false);
    assert_eq!(v["tangency_plus"]["kind"], "swallowtail");
}

#[test]
fn classify_flags_identically_null_sliding() {
    let out = run(&["classify", "--family", "appendix_null_sliding"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["verdict"], "degenerate");
    assert_eq!(v["degenerate"], true);
    assert!(v["qualifier"].as_str().unwrap().contains("identically null"));
}

#[test]
fn classify_missing_h_is_input_error() {
    let f = write_temp(r#"{"name": "x", "x_plus": [[], [], []], "x_minus": [[], [], []]}"#);
    let out = run(&["classify", "--system", f.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing field `h`"));
}

#[test]
fn classify_system_json_matches_family() {
    let sys = psvf_core::catalog::fold_regular_system();
    let f = write_temp(&serde_json::to_string(&sys).unwrap());
    let from_file = run(&["classify", "--system", f.path().to_str().unwrap()]);
    assert!(from_file.status.success());
    assert_eq!(stdout_json(&from_file)["verdict"], "Xi0_2");
}

#[test]
fn unfold_sweep_rows_and_slope() {
    let out = run(&["unfold", "--family", "lips", "--grid", "-0.1:0.1:21"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.trim_end().lines().collect();
    assert_eq!(rows[0], "lambda,x1,x2,x3,eta,verdict,converged");
    assert_eq!(rows.len(), 22);
    let parsed: Vec<(f64, f64)> = rows[1..]
        .iter()
        .map(|r| {
            let cols: Vec<&str> = r.split(',').collect();
            assert_eq!(cols[6], "true");
            (cols[0].parse().unwrap(), cols[4].parse().unwrap())
        })
        .collect();
    // Least-squares slope of eta(lambda) from the emitted rows.
    let n = parsed.len() as f64;
    let lm: f64 = parsed.iter().map(|p| p.0).sum::<f64>() / n;
    let em: f64 = parsed.iter().map(|p| p.1).sum::<f64>() / n;
    let cov: f64 = parsed.iter().map(|p| (p.0 - lm) * (p.1 - em)).sum();
    let var: f64 = parsed.iter().map(|p| (p.0 - lm).powi(2)).sum();
    assert!((cov / var - (-2.0)).abs() <= 1e-4);
    assert!(String::from_utf8_lossy(&out.stderr).contains("deta/dlambda"));
}

#[test]
fn unfold_single_point_grid_has_no_slope() {
    let out = run(&["unfold", "--family", "lips", "--grid", "0.05:0.05:1"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim_end().lines().count(), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("no slope fit"));
}

#[test]
fn unfold_needs_an_unfolding_functional() {
    let out = run(&["unfold", "--family", "crossing_pair", "--grid", "0:1:3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn flow_slide_exit_trajectory() {
    let f = write_temp(SLIDE_EXIT_JSON);
    let out = run(&[
        "flow", "--system", f.path().to_str().unwrap(), "--point", "-1,0,0", "--tmax", "2",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.trim_end().lines().collect();
    assert_eq!(rows[0], "t,x1,x2,x3,segment_index,governing");
    let governing: Vec<&str> =
        rows[1..].iter().map(|r| r.split(',').nth(5).unwrap()).collect();
    assert!(governing.contains(&"sliding") && governing.contains(&"X_plus"));
    let last: Vec<f64> =
        rows.last().unwrap().split(',').take(4).map(|c| c.parse().unwrap()).collect();
    assert!((last[0] - 2.0).abs() <= 1e-9);
    assert!((last[1] - 0.5).abs() <= 1e-6);
    assert!(last[2].abs() <= 1e-9);
    assert!((last[3] - 0.125).abs() <= 1e-6);
    assert!(String::from_utf8_lossy(&out.stderr).contains("segments: 2"));
}

#[test]
fn flow_diagnostic_exits_one_with_partial_output() {
    // X+ parallel to M with X+h == 0 at the start: no usable continuation.
    let f = write_temp(
        r#"{
          "name": "degenerate_start",
          "h": [{"exp": [0, 0, 1], "c": 1.0}],
          "x_plus": [[{"exp": [0, 0, 0], "c": 1.0}], [], []],
          "x_minus": [[], [], [{"exp": [0, 0, 0], "c": -1.0}]]
        }"#,
    );
    let out = run(&["flow", "--system", f.path().to_str().unwrap(), "--tmax", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("t,x1,x2,x3"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("diagnostic:"));
}

#[test]
fn twofold_return_map_kinds() {
    for (b, kind) in [("2", "saddle"), ("0.5", "elliptic"), ("1", "parabolic_boundary")] {
        let out = run(&[
            "twofold", "--family", "twofold_quadratic", "--param", "a=1", "--param",
            &format!("b={b}"),
        ]);
        assert!(out.status.success(), "b = {b}");
        let v = stdout_json(&out);
        assert_eq!(v["class"]["kind"], "elliptic");
        assert_eq!(v["return_map"]["kind"], kind, "b = {b}");
        let det = v["return_map"]["det"].as_f64().unwrap();
        assert!((det - 1.0).abs() <= 1e-6, "b = {b}: det {det}");
        assert!(v["condition_e"].is_object());
    }
}

#[test]
fn twofold_rejects_points_that_are_not_twofolds() {
    let out = run(&["twofold", "--family", "crossing_pair"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sliding_prints_the_rescaled_field() {
    let out = run(&["sliding", "--family", "saddle_node_normal", "--param", "lambda=0.25"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("X^s_1 = 0.25 - x1^2"), "got: {text}");
    assert!(text.contains("X^s_2 = -x2"), "got: {text}");
}

#[test]
fn sliding_json_lists_components() {
    let out = run(&["sliding", "--family", "saddle_node_normal", "--format", "json"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["components"].as_array().unwrap().len(), 2);
    assert_eq!(v["spatial"].as_array().unwrap().len(), 3);
}

#[test]
fn catalog_lists_every_family() {
    let out = run(&["catalog"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    let entries = v.as_array().unwrap();
    assert_eq!(entries.len(), psvf_core::catalog::family_names().len());
    let lips = entries.iter().find(|e| e["name"] == "lips").unwrap();
    assert_eq!(lips["expected"][1], "Xi1_1");
    assert_eq!(lips["eta"], "lips_beak");
}

#[test]
fn identical_invocations_are_byte_identical() {
    let args = ["unfold", "--family", "swallowtail", "--grid", "-0.1:0.1:11"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
    let args = ["classify", "--family", "lips"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
}

#[test]
fn out_flag_writes_the_same_bytes_as_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let to_file = run(&["classify", "--family", "lips", "--out", path.to_str().unwrap()]);
    assert!(to_file.status.success());
    assert!(to_file.stdout.is_empty());
    let to_stdout = run(&["classify", "--family", "lips"]);
    assert_eq!(std::fs::read(&path).unwrap(), to_stdout.stdout);
}

#[test]
fn input_errors_exit_two() {
    let cases: &[&[&str]] = &[
        &["classify", "--family", "not_a_family"],
        &["classify", "--family", "lips", "--param", "nope=1"],
        &["classify", "--family", "lips", "--point", "1,2"],
        &["classify", "--family", "lips", "--format", "csv"],
        &["classify"],
        &["unfold", "--family", "lips", "--grid", "0:1:0"],
        &["flow", "--family", "crossing_pair", "--tmax", "-1"],
    ];
    for args in cases {
        assert_eq!(run(args).status.code(), Some(2), "args: {args:?}");
    }
}
