use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn quermass(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quermass")).args(args).env("QUERMASS_OUT_DIR", dir).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

const DENTED: &str = r#"{"base":1.0,"terms":[{"coeff":-0.5,"powers":[2,0,0,0]}]}"#;

#[test]
fn ball_check_succeeds_and_writes_report() {
    let dir = TempDir::new().unwrap();
    let out = quermass(dir.path(), &["check", "--family", "ball", "--dim", "3", "--ineq", "af1"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("af1_report.json")).unwrap()).unwrap();
    assert_eq!(report["verdict"], "equality_within_tol");
    assert!((report["ratio"].as_f64().unwrap() - 1.0).abs() < 1e-8);
}

#[test]
fn bad_configuration_exits_with_one() {
    let dir = TempDir::new().unwrap();
    let out = quermass(dir.path(), &["check", "--family", "ellipsoid", "--dim", "3", "--axes", "1,2"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("semi-axes"));
    let out = quermass(dir.path(), &["check", "--family", "ball", "--dim", "3", "--series-K", "0"]);
    assert_eq!(code(&out), 1);
    let out = quermass(dir.path(), &["check", "--domain", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(code(&out), 1);
}

#[test]
fn domain_file_is_accepted() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("ellipsoid.json");
    std::fs::write(&file, r#"{"family":"ellipsoid","dim":3,"params":{"axes":[1.0,1.0,2.0]}}"#).unwrap();
    let out = quermass(dir.path(), &["check", "--domain", file.to_str().unwrap(), "--ineq", "af1"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = std::fs::read_to_string(dir.path().join("af1_report.json")).unwrap();
    assert!(report.contains("\"holds\""));
}

#[test]
fn cone_failure_exits_with_three() {
    let dir = TempDir::new().unwrap();
    let out = quermass(
        dir.path(),
        &["check", "--family", "radial-graph", "--dim", "4", "--params", DENTED, "--ineq", "af2", "--quad-order", "12"],
    );
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn solver_cap_exits_with_four() {
    let dir = TempDir::new().unwrap();
    let out = quermass(
        dir.path(),
        &["ot-solve", "--family", "ball", "--dim", "2", "-N", "256", "--max-iter", "1", "--mass-tol", "1e-12"],
    );
    assert_eq!(code(&out), 4);
    let out = quermass(dir.path(), &["ot-solve", "--family", "ball", "--dim", "3", "-N", "64"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn resuming_a_converged_checkpoint_takes_no_iterations() {
    let dir = TempDir::new().unwrap();
    let first = dir.path().join("first.json");
    let out = quermass(
        dir.path(),
        &["ot-solve", "--family", "ellipsoid", "--axes", "1,2", "-N", "256", "--out", first.to_str().unwrap()],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("mean_map_deviation="));
    let second = dir.path().join("second.json");
    let out =
        quermass(dir.path(), &["ot-solve", "--resume", first.to_str().unwrap(), "--out", second.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("iterations=0"));
    let log = std::fs::read_to_string(dir.path().join("second.log.csv")).unwrap();
    assert_eq!(log.lines().count(), 2);
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
}

#[test]
fn sweep_writes_table_and_plot() {
    let dir = TempDir::new().unwrap();
    let out = quermass(dir.path(), &["sweep", "--eps", "0,0.1", "--quad-order", "16"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "eps,lhs,rhs,ratio,min_cone_margin,flagged");
    assert_eq!(lines.len(), 3);
    for line in &lines[1..] {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 6);
        assert!(cols[3].parse::<f64>().unwrap() >= 1.0 - 1e-9);
        assert_eq!(cols[5], "false");
    }
    let svg = std::fs::read_to_string(dir.path().join("sweep.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
}

#[test]
fn uncertified_sweep_rows_are_flagged() {
    let dir = TempDir::new().unwrap();
    let out = quermass(dir.path(), &["sweep", "--eps", "2", "--quad-order", "12", "--no-plot"]);
    assert_ne!(code(&out), 1, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().ends_with(",true"));
    assert!(!dir.path().join("sweep.svg").exists());
}

#[test]
fn short_series_fails_the_identity_suite() {
    let dir = TempDir::new().unwrap();
    let out = quermass(dir.path(), &["identities", "--series-K", "5", "--matrices", "20", "--quad-order", "12"]);
    assert_ne!(code(&out), 0);
    let rows: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("identities.json")).unwrap()).unwrap();
    let fact_b = rows.as_array().unwrap().iter().find(|r| r["name"] == "fact_b_derivative_series").unwrap();
    assert_eq!(fact_b["pass"], false);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let runs: [&[&str]; 3] = [
        &["check", "--family", "ellipsoid", "--axes", "1,1.5,2", "--ineq", "af2", "--quad-order", "12"],
        &["sweep", "--eps", "0,0.05", "--quad-order", "12"],
        &["identities", "--matrices", "20", "--quad-order", "12"],
    ];
    let outputs = ["af2_report.json", "sweep.csv", "identities.json"];
    for (args, file) in runs.iter().zip(outputs) {
        let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
        quermass(a.path(), args);
        quermass(b.path(), args);
        let (x, y) = (std::fs::read(a.path().join(file)).unwrap(), std::fs::read(b.path().join(file)).unwrap());
        assert!(!x.is_empty());
        assert_eq!(x, y, "{file} differs between runs");
    }
}
