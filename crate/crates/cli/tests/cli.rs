use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mwlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mwlab")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

const A2H: &str = r#"{
  "experiment": "a2h",
  "grid": {"m": 1, "n": 32, "length": 1.0},
  "d": 2,
  "family": {"family": "rotated_diagonal", "eps": 0.2, "theta": 0.3},
  "eps_grid": [0.1, 0.2],
  "time": {"nodes": 32}
}"#;

#[test]
fn small_run_writes_tables_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "a2h.json", A2H);
    let out = dir.path().join("out");
    let res = mwlab(&["a2h", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let csv = fs::read_to_string(out.join("a2h.csv")).unwrap();
    assert!(csv.starts_with("config_hash,"));
    assert_eq!(csv.lines().count(), 3);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["experiment"], "a2h");
    assert!(manifest["failure"].is_null());
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "a2h.json", A2H);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let res = mwlab(&["a2h", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", "5"]);
        assert_eq!(res.status.code(), Some(0));
    }
    assert_eq!(fs::read(a.join("a2h.csv")).unwrap(), fs::read(b.join("a2h.csv")).unwrap());
}

#[test]
fn refine_writes_stability_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "a2h.json", A2H);
    let out = dir.path().join("out");
    let res = mwlab(&["a2h", "--config", &cfg, "--out", out.to_str().unwrap(), "--refine"]);
    assert_eq!(res.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("stability.json")).unwrap()).unwrap();
    assert!(report["max_drift"].as_f64().unwrap().is_finite());
}

#[test]
fn config_problems_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_config(dir.path(), "a2h.json", A2H);
    let bad_json = write_config(dir.path(), "bad.json", "{\"experiment\": \"a2h\",");
    let missing = write_config(
        dir.path(),
        "missing.json",
        r#"{"experiment": "a2h", "weight_file": "no_such_field.mwlf"}"#,
    );
    let unknown_key = write_config(dir.path(), "typo.json", r#"{"experiment": "a2h", "sampels": 3}"#);
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    for args in [
        vec!["nonsense", "--config", good.as_str(), "--out", out],
        vec!["lp", "--config", good.as_str(), "--out", out],
        vec!["a2h", "--config", bad_json.as_str(), "--out", out],
        vec!["a2h", "--config", missing.as_str(), "--out", out],
        vec!["a2h", "--config", unknown_key.as_str(), "--out", out],
        vec!["a2h", "--config", "/definitely/not/here.json", "--out", out],
        vec!["a2h"],
    ] {
        let res = mwlab(&args);
        assert_eq!(res.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&res.stderr));
    }
}

#[test]
fn numeric_failure_exits_3_and_records_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "lp.json",
        r#"{
  "experiment": "lp",
  "d": 2,
  "family": {"family": "rotated_diagonal", "eps": 0.1, "theta": 0.3},
  "eps_grid": [0.1],
  "samples": 2,
  "time": {"nodes": 16, "t_max": 1e-4}
}"#,
    );
    let out = dir.path().join("out");
    let res = mwlab(&["lp", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(3), "{}", String::from_utf8_lossy(&res.stderr));
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert!(manifest["failure"]["error"].as_str().unwrap().contains("time-truncation"));
}
