use std::path::Path;
use std::process::Command;

const CONFIG: &str = r#"{"model": {"type": "isolated", "rho": 0.5}, "space": {"kind": "flat_torus", "dim": 2},
  "lambdas": [16, 64], "n": 200, "seed": 4,
  "budgets": {"bootstrap": 20, "localization": {"radii": [0, 0.25, 0.5, 1.0], "n_trials": 10}}}"#;

fn pclt(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_pclt")).args(args).env("RUST_LOG", "warn").output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("cfg.json");
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn clt_output_is_deterministic_modulo_timing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let mut canon = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let o = pclt(&["--config", &cfg, "--out", out.to_str().unwrap(), "clt"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        canon.push(std::fs::read(out.join("run_clt.canonical.json")).unwrap());
        let csv = std::fs::read_to_string(out.join("run_clt.csv")).unwrap();
        assert!(csv.starts_with("lambda,metric,value,lo,hi,n,seed\n"));
    }
    assert_eq!(canon[0], canon[1]);
    let v: serde_json::Value = serde_json::from_slice(&canon[0]).unwrap();
    assert_eq!(v["config"]["seed"], 4);
    assert!(v["version"].is_string() && v.get("timing").is_none());
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let out = dir.path().join("o");
    let o = pclt(&["--config", &cfg, "--seed", "99", "--threads", "1", "--out", out.to_str().unwrap(), "simulate"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("run_simulate.json")).unwrap()).unwrap();
    assert_eq!(v["config"]["seed"], 99);
    assert!(out.join("run_points.csv").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(pclt(&["clt"]).status.code(), Some(2));
    let bad = write_config(dir.path(), &CONFIG.replace("\"n\": 200", "\"n\": 5"));
    assert_eq!(pclt(&["--config", &bad, "clt"]).status.code(), Some(2));
    let missing = dir.path().join("absent.json");
    assert_eq!(pclt(&["--config", missing.to_str().unwrap(), "clt"]).status.code(), Some(4));
    let cfg = write_config(dir.path(), CONFIG);
    // No γ̂ budgets in the config.
    let o = pclt(&["--config", &cfg, "--out", dir.path().to_str().unwrap(), "gamma"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("budgets.gamma"));
}

#[test]
fn oracle_emits_json_lines() {
    let o = pclt(&["oracle", "--n", "3", "--kind", "birth-growth", "--kind", "ustat"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let lines: Vec<serde_json::Value> =
        String::from_utf8(o.stdout).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 6);
    assert!(lines.iter().all(|r| r["agree"] == true));
}

#[test]
fn localize_reports_step_profile() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let o = pclt(&["--config", &cfg, "--out", dir.path().to_str().unwrap(), "localize"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("run_localize.json")).unwrap()).unwrap();
    assert!(v["psi_model"].as_str().unwrap().starts_with("step"));
    assert!(v["bound"]["d_k_bound"].as_f64().unwrap() > 0.0);
}
