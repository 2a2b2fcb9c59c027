mod common;

use common::{fixture, json_of, run};

fn path(name: &str) -> String {
    fixture(name).to_string_lossy().into_owned()
}

#[test]
fn sections_exit_codes() {
    let sat = run(&["sections", "basis3", "--count"], &[]);
    assert_eq!(sat.status.code(), Some(0));
    assert_eq!(json_of(&sat)["verdict"], "sections-exist");

    let unsat = run(&["sections", "cab18"], &[]);
    assert_eq!(unsat.status.code(), Some(2));
    assert_eq!(json_of(&unsat)["verdict"], "no-global-section");
}

#[test]
fn bad_inputs_exit_one() {
    assert_eq!(run(&["build", &path("triangle.json")], &[]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"], &[]).status.code(), Some(1));
    assert_eq!(run(&["build", "no-such-model"], &[]).status.code(), Some(1));
    let bad = run(&["measure", "basis3", "--state", &path("bad_state.json")], &[]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("1/2"));
}

#[test]
fn help_exits_zero() {
    assert_eq!(run(&["--help"], &[]).status.code(), Some(0));
}

#[test]
fn measure_from_state_file() {
    let out = run(&["measure", "basis3", "--state", &path("basis3_state.json")], &[]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["ok"], true);
    assert_eq!(v["matches_trace"], true);
    let m = &v["projection_measure"];
    assert_eq!(m["v0"], "5/18");
    assert_eq!(m["v1"], "5/18");
    assert_eq!(m["v2"], "4/9");
    assert_eq!(m["1"], "1");
}

#[test]
fn operator_daseinisation_from_file() {
    let out = run(&["op-dasein", "basis3", "--op", &path("basis3_op_b.json")], &[]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    let bottom = &v["contexts"][0];
    assert_eq!(bottom["context"], "{1}");
    assert_eq!(bottom["outer"][0]["coeff"], "5/2");
    assert_eq!(bottom["inner"][0]["coeff"], "1");
}

#[test]
fn separating_context_found() {
    let out = run(
        &["separate", "basis3", "--first", &path("basis3_op_a.json"), "--second", &path("basis3_op_b.json")],
        &[],
    );
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["context"], "{v2,v0+v1}");
    assert_ne!(v["first"], v["second"]);
}

#[test]
fn hasse_writes_dot() {
    let dot = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli-cube8.dot");
    let out = run(&["hasse", "cube8", "--dot", dot.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&dot).unwrap();
    assert!(text.starts_with("digraph"));
    assert_eq!(text.matches("->").count(), 6);
}

#[test]
fn worker_env_is_honoured() {
    let a = run(&["ks-check", "peres33"], &[("KSTOPOS_WORKERS", "4")]);
    let b = run(&["ks-check", "peres33", "--workers", "0"], &[]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}
