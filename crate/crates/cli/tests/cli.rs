use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn run(args: &[&str], stdin: Option<&str>) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_treelineage"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut pipe = child.stdin.take().unwrap();
    pipe.write_all(stdin.unwrap_or("").as_bytes()).unwrap();
    drop(pipe);
    child.wait_with_output().unwrap()
}

fn ok(args: &[&str], stdin: Option<&str>) -> String {
    let out = run(args, stdin);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).unwrap()
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("treelineage-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

#[test]
fn gen_writes_a_line() {
    let v = json(&ok(&["gen", "line", "--n", "4"], None));
    assert_eq!(v["facts"].as_array().unwrap().len(), 3);
}

#[test]
fn pipeline_reaches_an_obdd() {
    let inst = ok(&["gen", "line", "--n", "5"], None);
    let dec = ok(&["decompose"], Some(&inst));
    assert!(json(&dec)["decomposition"]["width"].as_u64().unwrap() >= 1);
    let enc = ok(&["encode"], Some(&dec));
    let circ = ok(&["compile", "-q", "R(x,y) & R(y,z)"], Some(&enc));
    assert!(json(&circ)["circuit"].is_object());
    let obdd = json(&ok(&["to-obdd"], Some(&circ)));
    assert_eq!(obdd["order"].as_array().unwrap().len(), 4);
    let diff = json(&ok(&["to-obdd", "--strategy", "difference"], Some(&circ)));
    assert_eq!(diff, obdd);
    let ddnnf = ok(&["to-ddnnf"], Some(&circ));
    assert!(ddnnf.contains("true"));
}

#[test]
fn dot_output() {
    let inst = ok(&["gen", "line", "--n", "3"], None);
    let circ = ok(&["compile", "-q", "R(x,y)"], Some(&inst));
    assert!(ok(&["--format", "dot", "to-obdd"], Some(&circ)).starts_with("digraph"));
}

#[test]
fn engines_agree_on_probability() {
    let path = scratch("line4.json", &ok(&["gen", "line", "--n", "4"], None));
    let v = json(&ok(&["prob", "-q", "R(x,y) & R(y,z)", "-i", path.to_str().unwrap()], None));
    let values: Vec<&str> = v.as_array().unwrap().iter().map(|r| r["probability"].as_str().unwrap()).collect();
    assert_eq!(values, ["3/8"; 4]);
    let one = json(&ok(&["prob", "-q", "R(x,y)", "-i", path.to_str().unwrap(), "--engine", "obdd"], None));
    assert_eq!(one[0]["probability"], "7/8");
}

#[test]
fn oracle_check_passes() {
    let path = scratch("tree.json", &ok(&["gen", "tree", "--n", "7"], None));
    let v = json(&ok(&["oracle-check", "-q", "R(x,y) & R(y,z) | R(x,x)", "-i", path.to_str().unwrap()], None));
    assert_eq!(v["ok"], true);
}

#[test]
fn intricacy_verdicts() {
    let qp = "R(x,y) & R(y,z) & x!=y & y!=z & x!=z | R(x,y) & R(z,y) & x!=y & y!=z & x!=z \
              | R(y,x) & R(y,z) & x!=y & y!=z & x!=z";
    assert!(ok(&["intricate", "-q", qp], None).starts_with("intricate: true"));
    let out = ok(&["intricate", "-q", "R(x,y) & R(y,z)"], None);
    assert!(out.starts_with("intricate: false"));
    assert!(out.contains("FFFBFF"));
}

#[test]
fn unfold_and_verify() {
    let expr = r#"{"expr":{"exists":{"var":"x","body":{"exists":{"var":"y","body":{"atom":{"relation":"S","vars":["x","y"]}}}}}}}"#;
    let inst = r#"{"signature":[["S",2]],"facts":[["S","a","b"],["S","a","c"],["S","b","c"]]}"#;
    let e = scratch("expr.json", expr);
    let i = scratch("ranked.json", inst);
    let (e, i) = (e.to_str().unwrap(), i.to_str().unwrap());
    let v = json(&ok(&["unfold", "-e", e, "-i", i], None));
    assert_eq!(v["instance"]["facts"].as_array().unwrap().len(), 3);
    ok(&["verify-respects", "-e", e, "-i", i], None);
    let out = run(&["verify-respects", "-e", e, "-i", i, "-q", "S(x,y) & S(y,z)"], None);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bad_input_is_a_usage_error() {
    let path = scratch("bad-line.json", &ok(&["gen", "line", "--n", "3"], None));
    let out = run(&["prob", "-q", "R(", "-i", path.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    let out = run(&["decompose"], Some("not json"));
    assert_eq!(out.status.code(), Some(2));
}
