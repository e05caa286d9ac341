use std::io::Write;
use std::process::{Command, Output, Stdio};

const BIN: &str = env!("CARGO_BIN_EXE_osc-lab");
const INDICATOR: &str = r#"{"domain":[0,1],"segments":[{"len":0.5,"val":1},{"len":0.5,"val":0}]}"#;

fn run(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(BIN)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn eval_w_of_an_indicator() {
    let v = json(&run(&["eval", "-i", "-", "--weight", "exp"], INDICATOR));
    assert!((v["value"].as_f64().unwrap() - 0.5f64.exp()).abs() < 1e-6);
    let v = json(&run(&["eval", "-i", "-", "--what", "vc", "--c", "0"], INDICATOR));
    assert!((v["value"].as_f64().unwrap() - 0.5).abs() < 1e-15);
}

#[test]
fn norm_rearrange_verify_and_oracle() {
    let v = json(&run(&["norm", "-i", "-", "--p", "2"], INDICATOR));
    assert!((v[0]["norm_inf_variant"].as_f64().unwrap() - 0.5).abs() < 1e-6);
    let v = json(&run(&["rearrange", "-i", "-"], r#"{"domain":[0,1],"segments":[{"len":0.25,"val":-1},{"len":0.75,"val":2}]}"#));
    assert_eq!(v["segments"][0]["val"].as_f64(), Some(2.0));
    let v = json(&run(&["verify", "-i", "-", "--weight", "cosh"], INDICATOR));
    assert_eq!(v["violation"].as_bool(), Some(false));
    let v = json(&run(&["oracle", "-i", "-", "--grid", "64"], INDICATOR));
    assert!((v["value"].as_f64().unwrap() - 0.25).abs() < 1e-12);
}

#[test]
fn split_and_induct() {
    let small = r#"{"domain":[0,1],"segments":[{"len":0.5,"val":0.2},{"len":0.5,"val":0}]}"#;
    let v = json(&run(&["split", "-i", "-", "--epsilon", "1"], small));
    let bound = v["q_epsilon"].as_f64().unwrap();
    assert!(v["split"]["psi_left"].as_f64().unwrap() <= bound);
    assert!(v["split"]["psi_right"].as_f64().unwrap() <= bound);
    let out = run(&["induct", "-i", "-", "--epsilon", "1", "--depth", "3"], small);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("depth,node_index,a,b,t,g_value,psi_left,psi_right"));
    assert_eq!(text.lines().count(), 1 + 15);
}

#[test]
fn campaign_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let out = run(
        &["campaign", "--samples", "2", "--checks", "theorem1,sandwich", "--grid", "64", "--out", path.to_str().unwrap()],
        "",
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("sample_id,seed,check,weight"));
    assert!(text.lines().count() > 2);
}

#[test]
fn bad_input_exits_with_code_two() {
    let out = run(&["eval", "-i", "-"], "{not json");
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["eval", "-i", "-", "--weight", "power:0.5"], INDICATOR);
    assert_eq!(out.status.code(), Some(2));
}
