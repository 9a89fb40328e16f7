use std::path::Path;
use std::process::{Command, Output};

const QUICK: &str = r#"{
  "samples": {
    "points": 3,
    "max_total": 2,
    "coefficient_draws": 6,
    "duality_draws": 6,
    "ladder_points": 1,
    "ladder_max_total": 1,
    "ortho_nodes_n1": 400,
    "ortho_nodes_n2": 0
  }
}"#;

fn qonsager(dir: &Path, args: &[&str]) -> Output {
    let cfg = dir.join("quick.json");
    if !cfg.exists() {
        std::fs::write(&cfg, QUICK).unwrap();
    }
    Command::new(env!("CARGO_BIN_EXE_qonsager"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .env_remove("QONSAGER_WORKERS")
        .output()
        .unwrap()
}

fn report(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn spin_half_module_passes_with_dimension_eight() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = qonsager(tmp.path(), &["verify-onsager", "--spins", "0.5,0.5,0.5", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out.join("verify-onsager.json"));
    assert_eq!(r["passed"], true);
    let dim = r["checks"].as_array().unwrap().iter().find(|c| c["name"] == "dimension[0.5_0.5_0.5]").unwrap();
    assert_eq!(dim["witness"]["got"], 8);
}

#[test]
fn failing_check_exits_one_with_witness() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = qonsager(tmp.path(), &["verify-bispectral", "--tol-rel", "1e-300", "--no-csv", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let r = report(&out.join("verify-bispectral.json"));
    let c = r["checks"].as_array().unwrap().iter().find(|c| c["name"] == "dn_eigen").unwrap();
    assert_eq!(c["passed"], false);
    assert!(c["witness"]["n"].is_array() && c["witness"]["point"].is_array() && c["witness"]["k"].is_u64());
}

#[test]
fn empty_selection_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = qonsager(tmp.path(), &["all", "--suite", ",", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("usage"));
}

#[test]
fn configuration_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = qonsager(tmp.path(), &["all", "--suite", "nope", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = qonsager(tmp.path(), &["verify-onsager", "--spins", "0.7", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, r#"{"sampels": {}}"#).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_qonsager")).args(["spectrum", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_qonsager"))
        .args(["spectrum", "--out"])
        .arg(&out)
        .env("QONSAGER_WORKERS", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_qonsager")).arg("frobnicate").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn degenerate_parameters_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    // |alpha_2| = |alpha_1| violates the ordering the measure needs.
    let o = qonsager(
        tmp.path(),
        &["ortho-check", "--alpha", "1.3,0.7,0.7,0.8", "--q", "0.6", "--out", out.to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn module_dump_and_csv_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = qonsager(tmp.path(), &["build-module", "--spins", "1,0.5", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let m = report(&out.join("module_1_0.5.json"));
    for key in ["spins", "beta", "beta_star", "q", "basis_order", "matrices", "spectra", "residual_report"] {
        assert!(m.get(key).is_some(), "{key}");
    }
    assert_eq!(m["basis_order"].as_array().unwrap().len(), 6);
    assert_eq!(m["matrices"]["w0"][0][0].as_array().unwrap().len(), 2);

    let o = qonsager(tmp.path(), &["nepomechie-scan", "--spins", "1,0.5", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let mut rd = csv::Reader::from_path(out.join("nepomechie.csv")).unwrap();
    let head: Vec<String> = rd.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(head, ["module", "side", "solved_P", "P", "relation_residual", "max_coupling"]);
    let mut solved_rows = 0;
    for rec in rd.records() {
        let rec = rec.unwrap();
        if rec[2] == rec[3] {
            solved_rows += 1;
            assert!(rec[5].parse::<f64>().unwrap() < 1e-12);
        }
    }
    assert_eq!(solved_rows, 4 * 4);
}
