use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn indexlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_indexlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn record(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("record.json")).unwrap()).unwrap()
}

#[test]
fn malformed_json_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bad.json", "{\"experiment\": ");
    let out = indexlab(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("invalid configuration"));
}

#[test]
fn unknown_keys_are_config_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let top = write_config(tmp.path(), "a.json", r#"{"experiment":"freeze","colour":1}"#);
    assert_eq!(indexlab(&["run", &top]).status.code(), Some(2));
    let param = write_config(
        tmp.path(),
        "b.json",
        r#"{"experiment":"freeze","parameters":{"colour":1}}"#,
    );
    assert_eq!(indexlab(&["run", &param]).status.code(), Some(2));
    let name = write_config(tmp.path(), "c.json", r#"{"experiment":"nope"}"#);
    assert_eq!(indexlab(&["run", &name]).status.code(), Some(2));
}

#[test]
fn missing_config_file_fails() {
    let out = indexlab(&["run", "/nonexistent/config.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn suite_usage_errors() {
    assert_eq!(indexlab(&["suite", ""]).status.code(), Some(2));
    assert_eq!(indexlab(&["suite", "everything"]).status.code(), Some(2));
    assert_eq!(indexlab(&["suite"]).status.code(), Some(2));
    let bad_tol = indexlab(&["suite", "paper-acceptance", "--tol", "nope=1"]);
    assert_eq!(bad_tol.status.code(), Some(2));
    let bad_jobs = indexlab(&["suite", "paper-acceptance", "--jobs", "0"]);
    assert_eq!(bad_jobs.status.code(), Some(2));
}

#[test]
fn passing_run_writes_record_and_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("alpha");
    let cfg = write_config(
        tmp.path(),
        "alpha.json",
        &format!(
            r#"{{"experiment":"alpha-isometry","output":{}}}"#,
            serde_json::to_string(&out_dir).unwrap()
        ),
    );
    let out = indexlab(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rec = record(&out_dir);
    assert_eq!(rec["schema"], "indexlab/1");
    assert_eq!(rec["experiment"], "alpha-isometry");
    assert_eq!(rec["pass"], true);
    assert_eq!(rec["seed"], 0);
    assert!(!rec["paper_anchor"].as_str().unwrap().is_empty());
    assert_eq!(rec["parameters"]["points"], 801);
    let csv = std::fs::read_to_string(out_dir.join("isometry.csv")).unwrap();
    assert!(csv.starts_with("t,n,norm,abs_err\r\n"));
    assert_eq!(csv.lines().count(), 7);
}

#[test]
fn failing_run_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "strict.json",
        &format!(
            r#"{{"experiment":"alpha-isometry","output":{},"tolerances":{{"alpha_isometry":0}},"parameters":{{"points":11}}}}"#,
            serde_json::to_string(&tmp.path().join("o")).unwrap()
        ),
    );
    let out = indexlab(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(record(&tmp.path().join("o"))["pass"], false);
}

#[test]
fn out_flag_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "a.json", r#"{"experiment":"alpha-isometry"}"#);
    let dir = tmp.path().join("elsewhere");
    let out = indexlab(&["run", &cfg, "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.join("record.json").exists());
}

#[test]
fn bott_index_example() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("o");
    let cfg = write_config(
        tmp.path(),
        "b.json",
        &format!(
            r#"{{"experiment":"bott-index","parameters":{{"n":1,"t":1,"N":256}},"output":{}}}"#,
            serde_json::to_string(&dir).unwrap()
        ),
    );
    let out = indexlab(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    let rec = record(&dir);
    assert_eq!(rec["metrics"]["index"], 1.0);
    assert_eq!(rec["parameters"]["L"], 10.0);
}

#[test]
fn index_check_example() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("o");
    let cfg = write_config(
        tmp.path(),
        "i.json",
        &format!(
            r#"{{"experiment":"index-check","parameters":{{"flux":[1,-2],"algebra":[1,1],"N":16}},"output":{}}}"#,
            serde_json::to_string(&dir).unwrap()
        ),
    );
    let out = indexlab(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rec = record(&dir);
    for key in ["index_analytic", "index_topological", "index_morphism"] {
        assert_eq!(rec[key], serde_json::json!([1, -2]), "{key}");
    }
    assert_eq!(rec["pass"], true);
}

#[test]
fn csv_bodies_are_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let body = |dir: &Path| {
        format!(
            r#"{{"experiment":"quantization-convergence","seed":7,"parameters":{{"operator":{{"grid":{{"N":64}},"coefficients":"variable-speed"}},"t":[4,8,16]}},"output":{}}}"#,
            serde_json::to_string(dir).unwrap()
        )
    };
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for (name, dir) in [("a.json", &a), ("b.json", &b)] {
        let cfg = write_config(tmp.path(), name, &body(dir));
        assert!(indexlab(&["run", &cfg]).status.code().is_some());
    }
    let csv_a = std::fs::read(a.join("convergence.csv")).unwrap();
    let csv_b = std::fs::read(b.join("convergence.csv")).unwrap();
    assert!(!csv_a.is_empty());
    assert_eq!(csv_a, csv_b);
    let (ra, rb) = (record(&a), record(&b));
    assert_eq!(ra["metrics"], rb["metrics"]);
    assert_eq!(ra["seed"], 7);
}

#[test]
fn inline_operator_config() {
    let tmp = tempfile::tempdir().unwrap();
    let n = 32;
    let a: Vec<[f64; 2]> = (0..n).map(|_| [0.0, -1.5]).collect();
    let b: Vec<[f64; 2]> = (0..n).map(|_| [0.0, 0.0]).collect();
    let dir = tmp.path().join("o");
    let cfg = serde_json::json!({
        "experiment": "quantization-convergence",
        "parameters": {
            "operator": {
                "grid": {"N": n, "topology": "circle"},
                "algebra": [1],
                "coefficients": {"a": [a], "b": b}
            },
            "t": [8, 16]
        },
        "output": dir
    });
    let path = write_config(tmp.path(), "inline.json", &cfg.to_string());
    let out = indexlab(&["run", &path]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(record(&dir)["metrics"]["last"].as_f64().unwrap() < 1e-8);
}
