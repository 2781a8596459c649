use std::path::PathBuf;
use std::process::{Command, Output};

use dissipation::io::CsvTable;
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dissipation")).args(args).output().expect("binary runs")
}

fn stdout_json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn stdout_csv(args: &[&str]) -> CsvTable {
    let out = run(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    CsvTable::parse_str(&String::from_utf8(out.stdout).unwrap()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dissipation-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn stderr_error(out: &Output) -> Value {
    let text = String::from_utf8(out.stderr.clone()).unwrap();
    assert_eq!(text.trim_end().lines().count(), 1, "stderr: {text}");
    serde_json::from_str(text.trim()).unwrap()
}

#[test]
fn clean_ring_winding() {
    let v = stdout_json(&["winding", "--model", "ring", "--L", "6", "--eps", "0", "--gamma", "4"]);
    assert_eq!(v["w"], 4);
    assert_eq!(v["command"], "winding");
    assert_eq!(v["params"]["L"], 6);
    assert!(v["version"].is_string());
}

#[test]
fn two_level_mean_is_flat() {
    let t = stdout_csv(&["two-level", "--delta", "0.5", "--omega-sweep", "0.05:1.5:30", "--gamma", "1"]);
    let mean = t.column("mean").unwrap();
    assert_eq!(mean.len(), 30);
    assert!(mean.iter().all(|m| (m - 1.0).abs() < 1e-10), "{mean:?}");
    for (a, b) in t.column("variance").unwrap().iter().zip(t.column("variance_closed").unwrap()) {
        assert!((a / b - 1.0).abs() < 1e-8);
    }
}

#[test]
fn single_level_moments() {
    let v = stdout_json(&["moments", "--model", "single-level", "--gamma", "1"]);
    assert!((v["mean"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!((v["variance"].as_f64().unwrap() - 0.25).abs() < 1e-12);
    assert!((v["p_det"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn reruns_are_byte_identical() {
    let args = ["ring", "--L", "8", "--eps-sweep", "0:0.5:6", "--seed", "11"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn output_file_round_trips() {
    let path = scratch("cm.csv");
    let p = path.to_str().unwrap();
    let out = run(&["conditional-mean", "--model", "two-level", "--omega", "0.01", "--output", p]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let t = CsvTable::parse_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(t.header["command"], "conditional-mean");
    assert_eq!(t.header["w"], 2);
    assert_eq!(t.columns, ["theta", "mean_c", "scaled", "asymptotic"]);
    assert_eq!(t.rows.len(), 201);
    assert_eq!(CsvTable::parse_str(&t.to_csv_string()).unwrap(), t);
}

#[test]
fn json_format_for_tables() {
    let v = stdout_json(&["decay-dist", "--t-sweep", "0:2:5", "--format", "json"]);
    assert_eq!(v["rows"].as_array().unwrap().len(), 5);
    assert_eq!(v["rows"][0][1], 2.0);
}

#[test]
fn config_file_with_flag_override() {
    let path = scratch("config.json");
    std::fs::write(&path, r#"{"model": "ring", "L": 6, "gamma": 0.5}"#).unwrap();
    let p = path.to_str().unwrap();
    let v = stdout_json(&["moments", "--config", p]);
    assert!((v["mean"].as_f64().unwrap() - 4.0).abs() < 1e-8);
    let v = stdout_json(&["moments", "--config", p, "--gamma", "2"]);
    assert!((v["mean"].as_f64().unwrap() - 1.0).abs() < 1e-8);
    assert_eq!(v["params"]["gamma"], 2.0);

    std::fs::write(&path, r#"{"gama": 1}"#).unwrap();
    let out = run(&["moments", "--config", p]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn system_file_model() {
    let path = scratch("system.json");
    std::fs::write(
        &path,
        r#"{"hamiltonian": [[[0.25, 0], [0.1, 0]], [[0.1, 0], [-0.25, 0]]], "decay_state": [[1, 0], [0, 0]], "gamma": 1.0}"#,
    )
    .unwrap();
    let v = stdout_json(&["poles", "--model", "file", "--system", path.to_str().unwrap(), "--grid", "4"]);
    assert_eq!(v["w"], 2);
    assert_eq!(v["diagnostics"]["exact"], true);
    assert_eq!(v["potential"]["values"].as_array().unwrap().len(), 4);
}

#[test]
fn invalid_parameters_exit_two() {
    for args in [
        vec!["winding", "--gamma", "-1"],
        vec!["ring", "--L", "5"],
        vec!["two-level", "--omega-sweep", "1:2:0"],
        vec!["winding", "--no-such-flag"],
        vec!["poles", "--model", "file"],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert_eq!(stderr_error(&out)["error"], "validation");
    }
}

#[test]
fn numerical_failure_exits_three() {
    let out = run(&["line-multichannel", "--gamma", "0.01", "--t-max", "1"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_error(&out)["error"], "numerical");
}
