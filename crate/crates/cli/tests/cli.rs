use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use distnet::{fixtures, parse_net};
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(format!("{name}.net"))
}

fn fx(name: &str) -> String {
    fixture(name).to_str().unwrap().to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_distnet")).args(args).output().unwrap()
}

fn run_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_distnet"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_str(&stdout(o)).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

#[test]
fn validate_accepts_every_fixture() {
    for (name, _) in fixtures::all() {
        let o = run(&["--json", "validate", &fx(name)]);
        assert_eq!(code(&o), 0, "{name}");
        assert_eq!(json(&o)["verdict"], "yes");
    }
}

#[test]
fn parse_errors_exit_2_and_name_the_line() {
    let o = run_stdin(&["validate", "-"], "place p\ntrans t label a\narc x -> t\n");
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3"), "{err}");
    assert!(err.contains("\"x\""), "{err}");
}

#[test]
fn missing_file_exits_2() {
    assert_eq!(code(&run(&["validate", "/nonexistent/net.net"])), 2);
}

#[test]
fn bound_hit_exits_3_with_unknown() {
    let o = run(&["--json", "--bound", "2", "validate", &fx("fig4")]);
    assert_eq!(code(&o), 3);
    assert_eq!(json(&o)["verdict"], "unknown");
    let o = run(&["--bound", "2", "equiv", &fx("fig4"), &fx("fig5")]);
    assert_eq!(code(&o), 3);
}

#[test]
fn contact_exits_4() {
    let net = "place p marked\nplace q marked\ntrans t label a\narc p -> t\narc t -> q\n";
    let o = run_stdin(&["--json", "validate", "-"], net);
    assert_eq!(code(&o), 4);
    assert_eq!(json(&o)["verdict"], "no");
}

#[test]
fn equiv_exit_codes() {
    assert_eq!(code(&run(&["equiv", &fx("fig7-spec"), &fx("fig7-impl")])), 0);
    let o = run(&["--json", "equiv", &fx("fig2"), &fx("fig3")]);
    assert_eq!(code(&o), 1);
    let v = json(&o);
    assert_eq!(v["equivalent"], false);
    assert_eq!(v["witness"]["trace"], serde_json::json!([]));
}

#[test]
fn bounded_equiv_is_labelled_unsound() {
    let o = run(&["--json", "equiv", "--bounded", "2", &fx("fig4"), &fx("fig5")]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["bounded"], 2);
    assert_eq!(v["sound"], false);
}

#[test]
fn classify_reports_fig2_as_truly_synchronous() {
    let o = run(&["--json", "classify", &fx("fig2")]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["truly_synchronous"]["verdict"], "yes");
    assert_eq!(v["distributed"]["verdict"], "no");
    assert_eq!(v["plain_distributable"]["verdict"], "no");
}

#[test]
fn pretty_classify_is_a_table() {
    let o = run(&["--pretty", "classify", &fx("fig1")]);
    let text = stdout(&o);
    assert!(text.lines().any(|l| l.starts_with("fully asynchronous") && l.ends_with("no")));
    assert!(text.lines().any(|l| l.starts_with("asymmetrically asynchronous") && l.ends_with("yes")));
}

#[test]
fn semantics_json_nests_menus() {
    let o = run(&["--json", "semantics", &fx("fig1")]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    let states = v["states"].as_array().unwrap();
    assert_eq!(states.len(), 2);
    assert_eq!(states[0]["menus"], serde_json::json!([[[["a", 1]]]]));
}

#[test]
fn tcc_transform_round_trips_to_fig5_and_writes_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let side = dir.path().join("prov.json");
    let o = run(&["transform", "tcc", &fx("fig4"), "--provenance", side.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let net = parse_net(&stdout(&o)).unwrap();
    assert!(net.same_elements(&fixtures::fig5()));
    let prov: Value = serde_json::from_str(&std::fs::read_to_string(&side).unwrap()).unwrap();
    assert_eq!(prov["places"]["p"]["kind"], "original");
    let generated = prov["transitions"]
        .as_object()
        .unwrap()
        .values()
        .filter(|o| o["kind"] != "original")
        .count();
    assert!(generated > 0);

    let o = run(&["dot", &fx("fig5"), "--provenance", side.to_str().unwrap()]);
    let dot = stdout(&o);
    assert!(dot.starts_with("digraph"));
    assert!(dot.contains("dashed"));
    assert!(dot.contains("fillcolor=gray85"));
}

#[test]
fn async_transform_from_requirement_or_file() {
    let dir = tempfile::tempdir().unwrap();
    let dist = dir.path().join("d.json");
    std::fs::write(&dist, r#"{"p": 0, "q": 1, "t": 0, "u": 0}"#).unwrap();
    let from_file = run(&["transform", "async", &fx("fig1"), "--dist", dist.to_str().unwrap()]);
    assert_eq!(code(&from_file), 0);
    let net = parse_net(&stdout(&from_file)).unwrap();
    assert!(net.place("q__u").is_some());
    assert!(net.place("p__t").is_none());

    let fd = run(&["transform", "async", &fx("fig1"), "--req", "fd"]);
    let net = parse_net(&stdout(&fd)).unwrap();
    assert_eq!(net.transition_count(), 5);
}

#[test]
fn async_transform_needs_a_distribution() {
    assert_eq!(code(&run(&["transform", "async", &fx("fig1")])), 2);
    assert_eq!(code(&run(&["transform", "async", &fx("fig1"), "--req", "xy"])), 2);
    let dir = tempfile::tempdir().unwrap();
    let dist = dir.path().join("d.json");
    std::fs::write(&dist, r#"{"p": 0}"#).unwrap();
    assert_eq!(code(&run(&["transform", "async", &fx("fig1"), "--dist", dist.to_str().unwrap()])), 2);
}

#[test]
fn hide_turns_an_action_silent() {
    let o = run(&["transform", "hide", &fx("fig2"), "b"]);
    assert_eq!(code(&o), 0);
    let net = parse_net(&stdout(&o)).unwrap();
    assert!(!net.visible_actions().contains("b"));
    assert!(net.has_tau());
}

#[test]
fn verify_random_nets() {
    let o = run(&["--json", "verify", "--random", "5", "--seed", "3"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    let results = v["results"].as_array().unwrap();
    assert_eq!(results.len(), 5);
    assert!(results.iter().all(|r| r["verdict"] == "yes"));
}

#[test]
fn verify_fixture_files() {
    let o = run(&["--json", "verify", &fx("fig4"), &fx("fig6-spec")]);
    assert_eq!(code(&o), 0);
    let checks = &json(&o)["results"][0]["checks"];
    assert!(checks.as_array().unwrap().iter().any(|c| c["check"] == "tcc/branching_clauses"));
}
