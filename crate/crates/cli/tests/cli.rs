use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use apaths_cli::Report;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn apaths(args: &[&str], config: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_apaths"))
        .args(args)
        .arg("--config")
        .arg(config)
        .output()
        .unwrap()
}

fn stdout_report(out: &Output) -> Report {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn jacobi_bivector_passes() {
    let out = apaths(&["check-algebroid"], &config("so3_dual.json"));
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_report(&out);
    assert!(report.pass);
    let names: Vec<&str> = report.records.iter().map(|r| r.name.as_str()).collect();
    assert_eq!(names, ["poisson_jacobi", "anchor_homomorphism", "section_jacobi"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("PASS poisson_jacobi"));
}

#[test]
fn non_jacobi_bivector_exits_one() {
    let out = apaths(&["check-algebroid"], &config("non_jacobi.json"));
    assert_eq!(out.status.code(), Some(1));
    let report = stdout_report(&out);
    assert!(!report.pass);
    assert!(report.failures().any(|r| r.name == "poisson_jacobi" && r.residual > 0.5));
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"dim": 2, "poisson": [{"i": 1, "j": 2, "expr": "x1 + x3"}]}"#).unwrap();
    let out = apaths(&["check-algebroid"], &bad);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("poisson[0].expr"), "{err}");
    assert!(err.contains("byte 5"), "{err}");
    assert!(out.stdout.is_empty());

    std::fs::write(&bad, r#"{"dim": 2, "poisson": [{"i": 1, "j": "two", "expr": "1"}]}"#).unwrap();
    let out = apaths(&["check-algebroid"], &bad);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("poisson[0].j"));

    let out = apaths(&["check-algebroid"], &dir.path().join("missing.json"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn task_disagreement_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    std::fs::write(&path, r#"{"task": "homotopy", "dim": 2, "poisson": []}"#).unwrap();
    let out = apaths(&["check-algebroid"], &path);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("homotopy"));
}

#[test]
fn constant_family_has_zero_end_value() {
    let out = apaths(&["homotopy"], &config("constant_family.json"));
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_report(&out);
    let end = report.records.iter().find(|r| r.name == "homotopy-end-value").unwrap();
    assert_eq!(end.residual, 0.0);
}

#[test]
fn report_and_csv_files() {
    let dir = tempfile::tempdir().unwrap();
    let (report, csv) = (dir.path().join("r.json"), dir.path().join("c.csv"));
    let out = Command::new(env!("CARGO_BIN_EXE_apaths"))
        .arg("convergence")
        .arg("--config")
        .arg(config("so3_convergence.json"))
        .args(["--seed", "2", "--report"])
        .arg(&report)
        .arg("--csv")
        .arg(&csv)
        .output()
        .unwrap();
    assert!(out.stdout.is_empty());
    let parsed: Report = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(parsed.seed, 2);
    assert_eq!(out.status.code(), Some(if parsed.pass { 0 } else { 1 }));
    assert!(parsed.config.get("output").map_or(true, |o| o["report"].is_null()));

    let mut rows = csv::Reader::from_path(&csv).unwrap();
    assert_eq!(rows.headers().unwrap(), vec!["n_t", "defect", "order"]);
    let rows: Vec<Vec<String>> = rows.records().map(|r| r.unwrap().iter().map(String::from).collect()).collect();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0][2], "");
    let defect = |i: usize| rows[i][1].parse::<f64>().unwrap();
    for i in 1..rows.len() {
        let order: f64 = rows[i][2].parse().unwrap();
        assert!((order - (defect(i - 1) / defect(i)).log2()).abs() < 1e-12);
    }
}

#[test]
fn integrate_path_writes_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("p.csv");
    let out = Command::new(env!("CARGO_BIN_EXE_apaths"))
        .arg("integrate-path")
        .arg("--config")
        .arg(config("so3_dual.json"))
        .args(["--nt", "33", "--csv"])
        .arg(&csv)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rows = csv::Reader::from_path(&csv).unwrap();
    assert_eq!(rows.headers().unwrap(), vec!["t", "x1", "x2", "x3", "a1", "a2", "a3"]);
    assert_eq!(rows.records().count(), 33);
}

#[test]
fn unknown_task_is_rejected() {
    let out = apaths(&["integrate"], &config("so3_dual.json"));
    assert_eq!(out.status.code(), Some(2));
}
