use std::f64::consts::PI;
use std::path::Path;

use jacobi_jost::harness::main_with_args;

const POWER_LAW: &str = r#"{"kind":"power_law","alpha":0.1,"r1":0.7,"b":0.05,"r2":0.7}"#;

fn run(args: &[&str]) -> i32 {
    main_with_args(std::iter::once("jacobi-jost").chain(args.iter().copied()))
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(|c| c.parse::<f64>().unwrap_or(f64::NAN)).collect()).collect();
    (header, rows)
}

#[test]
fn free_weight_scan_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("w.csv");
    assert_eq!(run(&["weight-scan", "--model", r#"{"kind":"free"}"#, "--grid", "-0.99:0.99:101", "--out", out.to_str().unwrap()]), 0);
    let (header, rows) = read_csv(&out);
    assert_eq!(header, ["lambda", "w", "kappa", "eta", "tail_index", "kind"]);
    assert_eq!(rows.len(), 101);
    for r in &rows {
        assert!((r[1] - 2.0 / PI * (1.0 - r[0] * r[0]).sqrt()).abs() < 1e-10);
    }
    // the temporary file was renamed into place
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn model_file_and_json_format() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    std::fs::write(&model, POWER_LAW).unwrap();
    let out = dir.path().join("w.json");
    let args = ["weight-scan", "--model", model.to_str().unwrap(), "--grid", "-0.5:0.5:5", "--tol", "1e-7", "--no-eigen", "--format", "json", "--out", out.to_str().unwrap()];
    assert_eq!(run(&args), 0);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["command"], "weight-scan");
    assert_eq!(v["model"]["kind"], "power_law");
    assert_eq!(v["rows"].as_array().unwrap().len(), 5);
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for name in ["a.json", "b.json"] {
        let out = dir.path().join(name);
        let args = ["weight-scan", "--model", POWER_LAW, "--grid", "-0.9:0.9:40", "--tol", "1e-7", "--format", "json", "--out", out.to_str().unwrap()];
        assert_eq!(run(&args), 0);
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn weight_scan_lists_eigenvalues() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("w.csv");
    assert_eq!(run(&["weight-scan", "--model", r#"{"kind":"explicit","b_list":[2.0]}"#, "--grid", "-0.5:0.5:3", "--out", out.to_str().unwrap()]), 0);
    let text = std::fs::read_to_string(&out).unwrap();
    let last = text.lines().last().unwrap();
    assert!(last.starts_with("2.125") && last.ends_with(",eigenvalue"), "{last}");
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn free_eig_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("e.csv");
    assert_eq!(run(&["eig", "--model", r#"{"kind":"free"}"#, "--out", out.to_str().unwrap()]), 0);
    let (header, rows) = read_csv(&out);
    assert_eq!(header[0], "lambda");
    assert!(rows.is_empty());
}

#[test]
fn asympt_check_residuals_decrease() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a.csv");
    assert_eq!(run(&["asympt-check", "--model", POWER_LAW, "--grid", "0.5:0.5:1", "--nmax", "20000", "--out", out.to_str().unwrap()]), 0);
    let (header, rows) = read_csv(&out);
    assert_eq!(header[3], "residual");
    let res: Vec<f64> = rows.iter().filter(|r| r[1] >= 100.0).map(|r| r[3]).collect();
    assert_eq!(res.len(), 3);
    assert!(res[0] > res[1] && res[1] > res[2], "{res:?}");
}

#[test]
fn oracle_compare_with_empty_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.json");
    assert_eq!(run(&["oracle-compare", "--model", r#"{"kind":"free"}"#, "--grid", "-0.5:0.5:0", "--format", "json", "--out", out.to_str().unwrap()]), 0);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(v["rows"].as_array().unwrap().is_empty());
    assert!(v["eigenvalues"].as_array().unwrap().is_empty());
}

#[test]
fn limits_and_convergence_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("l.csv");
    assert_eq!(run(&["limits", "--model", r#"{"kind":"explicit","b_list":[0.3]}"#, "--grid", "1.5:3:4", "--out", out.to_str().unwrap()]), 0);
    let (_, rows) = read_csv(&out);
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r[5] < 1e-8));
    let out = dir.path().join("c.csv");
    assert_eq!(run(&["convergence", "--model", POWER_LAW, "--grid", "0:0:1", "--nmax", "4096", "--out", out.to_str().unwrap()]), 0);
    let (_, rows) = read_csv(&out);
    assert_eq!(rows.len(), 4);
    assert!(rows[3][4] < rows[1][4]);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let o = out.to_str().unwrap();
    assert_eq!(run(&["weight-scan", "--model", r#"{"kind":"free"}"#, "--grid", "0.5:2:3", "--out", o]), 2);
    assert_eq!(run(&["weight-scan", "--model", r#"{"kind":"pollaczek"}"#, "--out", o]), 2);
    assert_eq!(run(&["weight-scan", "--model", r#"{"kind":"free"}"#, "--tol", "-1", "--out", o]), 2);
    assert_eq!(run(&["weight-scan", "--model", r#"{"kind":"free"}"#, "--nmax", "20000000", "--out", o]), 2);
    assert_eq!(run(&["weight-scan", "--model", r#"{"kind":"free"}"#, "--grid", "1:2", "--out", o]), 2);
    assert_eq!(run(&["frobnicate", "--model", r#"{"kind":"free"}"#]), 2);
    assert_eq!(run(&["weight-scan", "--model", "/nonexistent/model.json"]), 4);
    assert_eq!(run(&["weight-scan", "--model", r#"{"kind":"free"}"#, "--grid", "0:0.5:2", "--out", "/nonexistent/dir/x.csv"]), 4);
    // the tail start cannot reach 1e-14 below index 600
    assert_eq!(run(&["weight-scan", "--model", POWER_LAW, "--grid", "0:0:1", "--nmax", "600", "--tol", "1e-14", "--out", o]), 3);
    assert!(!Path::new("/nonexistent/dir/x.csv").exists());
}

#[test]
fn binary_reports_errors_as_json() {
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_jacobi-jost"))
        .args(["weight-scan", "--model", r#"{"kind":"free"}"#, "--grid", "0:2:3"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(v["error"]["kind"], "config");
    assert_eq!(v["schema_version"], 1);
    assert!(out.stdout.is_empty());
}
