use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> String {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data");
    root.join(name).to_string_lossy().into_owned()
}

fn filtrex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_filtrex")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn scratch(name: &str, text: &str) -> String {
    let dir = std::env::temp_dir().join(format!("filtrex-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn six_point_is_fully_viable() {
    let out = filtrex(&["check-viability", "--input", &data("six_point.json")]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["verdict"], true);
    assert_eq!(v["condition_support"], true);
    let z = v["deflator"].as_array().unwrap();
    let finals: Vec<&str> = z.iter().map(|row| row[1].as_str().unwrap()).collect();
    assert_eq!(finals, ["3/4", "3/4", "3/2", "3/2", "3/4", "3/4"]);
}

#[test]
fn four_point_fails_with_witness() {
    let out = filtrex(&["check-viability", "--input", &data("four_point.json")]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["verdict"], false);
    assert_eq!(v["witness"]["tick"], 1);
    assert!(v["witness"]["certificate"].is_array());
    assert!(v["deflator"].is_null());
}

#[test]
fn factors_on_six_points() {
    let out = filtrex(&["factors", "--input", &data("six_point.json")]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let phi = &v["phi"][0][1];
    assert!(phi == &serde_json::json!(["2/3", "-2/3"]) || phi == &serde_json::json!(["-2/3", "2/3"]));
    assert_eq!(v["positivity"], true);
}

#[test]
fn validate_reports_summary() {
    let out = filtrex(&["validate", "--input", &data("four_point.json")]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["outcomes"], 4);
    assert_eq!(v["condition_support"], false);
}

#[test]
fn schema_errors_exit_2() {
    let p = scratch("broken.json", "{\"outcomes\": [");
    let out = filtrex(&["check-viability", "--input", &p]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    let out = filtrex(&["validate", "--input", "/nonexistent/instance.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn domain_errors_exit_1() {
    let bad_mass = r#"{"outcomes":["a","b"],"prob":["1/2","1/3"],"filtration":{"initial":[["a","b"]],"ticks":[]}}"#;
    let out = filtrex(&["validate", "--input", &scratch("mass.json", bad_mass)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn enlargement_not_containing_base_exits_1() {
    // G_1 misses the F_1 split
    let text = r#"{
        "outcomes": ["a", "b"],
        "prob": ["1/2", "1/2"],
        "filtration": {"initial": [["a", "b"]], "ticks": [{"pre": [["a", "b"]], "at": [["a"], ["b"]]}]},
        "enlarged": {"initial": [["a", "b"]], "ticks": [{"pre": [["a", "b"]], "at": [["a", "b"]]}]}
    }"#;
    let out = filtrex(&["validate", "--input", &scratch("not_enlarged.json", text)]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["valid"], false);
}

#[test]
fn verify_theorems_is_deterministic() {
    let args = |w: &'static str| ["verify-theorems", "--seed", "11", "--instances", "12", "--workers", w];
    let a = filtrex(&args("1"));
    let b = filtrex(&args("3"));
    let c = filtrex(&args("1"));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    let v = json(&a);
    assert_eq!(v["passed"], true);
    assert_eq!(v["results"].as_array().unwrap().len(), 12);
}

#[test]
fn generate_round_trips_through_validate() {
    let out = filtrex(&["generate", "--seed", "5", "--horizon", "2", "--kind", "progressive"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["filtration"]["ticks"].as_array().unwrap().len(), 2);
    let p = scratch("generated.json", &String::from_utf8(out.stdout).unwrap());
    assert_eq!(filtrex(&["validate", "--input", &p]).status.code(), Some(0));

    let forced = filtrex(&["generate", "--seed", "5", "--force-failure"]);
    let p = scratch("forced.json", &String::from_utf8(forced.stdout).unwrap());
    let v = json(&filtrex(&["check-viability", "--input", &p]));
    assert_eq!(v["verdict"], false);
}

#[test]
fn generate_is_seeded() {
    let a = filtrex(&["generate", "--seed", "9"]);
    let b = filtrex(&["generate", "--seed", "9"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn output_flag_writes_file() {
    let dir = std::env::temp_dir().join(format!("filtrex-cli-out-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join("six.json");
    let out = filtrex(&["generate", "--model", "six-point", "--output", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let written: Value = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
    let shipped: Value = serde_json::from_str(&std::fs::read_to_string(data("six_point.json")).unwrap()).unwrap();
    assert_eq!(written, shipped);
}

#[test]
fn kernel_eval_accessible_and_inaccessible() {
    let v = json(&filtrex(&["kernel-eval", "--input", &data("kernel_accessible.json")]));
    assert_eq!(v["jump_values"], serde_json::json!(["1/4", "-1/2"]));
    assert_eq!(v["series"]["holds"], true);

    let v = json(&filtrex(&["kernel-eval", "--input", &data("kernel_inaccessible.json")]));
    // with α = 1 the jump equals K‴
    assert_eq!(v["k"], v["jump_values"]);
    assert_eq!(v["k"], serde_json::json!(["3/4", "-1/2"]));
}

#[test]
fn kernel_eval_rejects_broken_invariants() {
    let text = r#"{"kind":"inaccessible","q":["1/2","1/2"],"qbar":["1/2","1/2"],"l_vals":[["-2"],["2"]],
        "r":["0"],"alpha":["1","1"],"j3":["0","0"],"zeta3":[["-2"],["2"]],"phi":["1"]}"#;
    let out = filtrex(&["kernel-eval", "--input", &scratch("bad_kernel.json", text)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn diagnose_series_flags_blowup() {
    let out = filtrex(&["diagnose-series", "--input", &data("series_blowup.json")]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["approximate"], true);
    assert_eq!(v["verdict"], "divergent");
    assert!(String::from_utf8_lossy(&out.stderr).contains("level"));
}
