use std::process::{Command, Output};

use serde_json::Value;

fn momentgap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_momentgap"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> (Value, i32) {
    let mut all = args.to_vec();
    all.extend(["--format", "json"]);
    let out = momentgap(&all);
    let v = serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)));
    (v, out.status.code().unwrap())
}

#[test]
fn constant_four_six() {
    let (v, code) = json(&["constant", "--p", "4", "--q", "6"]);
    assert_eq!(code, 0);
    assert!((v["C"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-6);
    assert!((v["lower_bound"].as_f64().unwrap() - 0.00390625).abs() < 1e-15);
    for key in ["p", "q", "a_star", "c_star", "tol"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn constant_three_four_is_consistent() {
    let (v, code) = json(&["constant", "--p", "3", "--q", "4"]);
    assert_eq!(code, 0);
    let c = v["C"].as_f64().unwrap();
    assert!(c >= v["lower_bound"].as_f64().unwrap() && c <= 1.0);
}

#[test]
fn constant_rejects_bad_exponents() {
    let out = momentgap(&["constant", "--p", "6", "--q", "4"]);
    assert_ne!(out.status.code(), Some(0));
    assert!(!out.stderr.is_empty());
}

#[test]
fn constant_csv_header() {
    let out = momentgap(&["constant", "--p", "4", "--q", "6", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("p,q,C,a_star,c_star,lower_bound,tol"));
}

#[test]
fn verify_is_byte_identical() {
    let args = ["verify", "--seed", "42", "--samples", "5000", "--format", "json"];
    let a = momentgap(&args);
    let b = momentgap(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["total_violations"], 0);
}

#[test]
fn verify_thread_count_does_not_change_output() {
    let args = ["verify", "--seed", "7", "--samples", "3000", "--format", "json"];
    let one = Command::new(env!("CARGO_BIN_EXE_momentgap"))
        .args(args)
        .env("MOMENTGAP_THREADS", "1")
        .output()
        .unwrap();
    let many = Command::new(env!("CARGO_BIN_EXE_momentgap"))
        .args(args)
        .env("MOMENTGAP_THREADS", "4")
        .output()
        .unwrap();
    assert_eq!(one.stdout, many.stdout);
}

#[test]
fn verify_witnesses_faulty_constant() {
    let (v, code) = json(&["verify", "--samples", "1000", "--c", "0.4"]);
    assert_eq!(code, 1);
    let probe = v["suites"]
        .as_array()
        .unwrap()
        .iter()
        .find(|s| s["name"] == "main_inequality_4_6_probe")
        .unwrap();
    assert!(probe["violations"].as_u64().unwrap() > 0);
    let atoms = &probe["witness"]["rv"];
    assert!(atoms[0]["value"].as_f64().unwrap() > 0.8);
    assert_eq!(atoms[1]["value"].as_f64().unwrap(), 2.0);
}

#[test]
fn verify_writes_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = momentgap(&["verify", "--samples", "500", "--format", "json", "--output", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["passed"], true);
}

#[test]
fn rademacher_flags_stone_anomaly() {
    let out = momentgap(&["rademacher", "--p", "0.5", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["dax1_rhs"], 1.0);
    assert_eq!(v["stone"]["exceeds_unit"], true);
    assert!(String::from_utf8_lossy(&out.stderr).contains("exceeds 1"));
}

#[test]
fn rademacher_spec_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("spec.json");
    std::fs::write(&path, r#"{"bias": 0.75, "coeffs": [1, 1], "normalize": true}"#).unwrap();
    let (v, code) = json(&["rademacher", "--input", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    let s = &v["spec"];
    assert!((s["fourth_moment"].as_f64().unwrap() - s["fourth_moment_exact"].as_f64().unwrap()).abs() < 1e-12);
    assert_eq!(s["dax1_holds"], true);

    std::fs::write(&path, r#"{"bias": 0.75, "coeffs": [1, 1]}"#).unwrap();
    let out = momentgap(&["rademacher", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn poincare_with_majority_function() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("maj.json");
    std::fs::write(&path, r#"{"n":3,"values":[1,1,1,-1,1,-1,-1,-1]}"#).unwrap();
    let (v, code) = json(&["poincare", "--input", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    let delta = v["delta"]["value"].as_f64().unwrap();
    assert!((0.000125..=0.000135).contains(&delta));
    let ratio = v["function"]["poincare_ratio"].as_f64().unwrap();
    assert!((ratio - 4.0 / (3.0 * 2f64.sqrt())).abs() < 1e-12);

    let bin = dir.path().join("maj.bin");
    let mut bytes = 3u32.to_le_bytes().to_vec();
    for v in [1.0f64, 1.0, 1.0, -1.0, 1.0, -1.0, -1.0, -1.0] {
        bytes.extend(v.to_le_bytes());
    }
    std::fs::write(&bin, bytes).unwrap();
    let (w, _) = json(&["poincare", "--input", bin.to_str().unwrap()]);
    assert_eq!(w["function"], v["function"]);
}

#[test]
fn expsum_csv_columns() {
    let out = momentgap(&["expsum", "--set", "squares", "--m", "2..4", "--report", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("m,l1,l4_4_exact,l6_6_exact,theorem_bound,gap"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "2");
    assert_eq!(first[2], "1.5");
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn expsum_list_two_point() {
    let (v, code) = json(&["expsum", "--set", "list", "--elements", "0,1"]);
    assert_eq!(code, 0);
    let row = &v["rows"][0];
    assert!((row["theorem"]["bound"].as_f64().unwrap() - 17.0 / 18.0).abs() < 1e-15);
    assert!((row["l1"]["value"].as_f64().unwrap() - 2.0 * 2f64.sqrt() / std::f64::consts::PI).abs() < 1e-8);
}

#[test]
fn expsum_rejects_bad_input() {
    assert_eq!(momentgap(&["expsum", "--set", "list", "--elements", "3"]).status.code(), Some(2));
    assert_eq!(momentgap(&["expsum", "--m", "1"]).status.code(), Some(2));
}

#[test]
fn reproduce_passes() {
    let out = momentgap(&["reproduce"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.matches("PASS").count(), 4);
    assert!(text.contains("0.31748"));
    assert!(text.contains("[0.000125, 0.000135]"));
}

#[test]
fn bad_thread_env_is_an_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_momentgap"))
        .args(["reproduce"])
        .env("MOMENTGAP_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
