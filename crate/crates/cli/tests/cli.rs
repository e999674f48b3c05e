use std::path::PathBuf;
use std::process::{Command, Output};

fn corpus(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/corpus").join(rel)
}

fn viewnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_viewnet")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn consistent_network_writes_a_witness() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("w");
    let dol = corpus("atm/atm.dol");
    let o = viewnet(&["check", dol.to_str().unwrap(), "--network", "N", "--witness", w.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("CONSISTENT"));
    assert!(w.join("trace.txt").is_file());

    let shown = viewnet(&["witness", w.to_str().unwrap()]);
    assert_eq!(code(&shown), 0);
    assert!(stdout(&shown).contains("ejectCard"));

    let o = viewnet(&[
        "check",
        dol.to_str().unwrap(),
        "--strategy",
        "decentralized",
        "--witnesses",
        w.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn inconsistent_network_exits_one() {
    let dol = corpus("atm_mutated/atm.dol");
    let o = viewnet(&["check", dol.to_str().unwrap(), "--strategy", "monolithic", "--format", "structured"]);
    assert_eq!(code(&o), 1);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verdict"], "INCONSISTENT");
}

#[test]
fn all_networks_report_the_worst_verdict() {
    let dol = corpus("pairwise/pairwise.dol");
    let o = viewnet(&["check", dol.to_str().unwrap(), "--all", "--format", "structured"]);
    assert_eq!(code(&o), 1);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 4);
}

#[test]
fn ambiguous_network_choice_is_a_usage_error() {
    let o = viewnet(&["check", corpus("pairwise/pairwise.dol").to_str().unwrap()]);
    assert_eq!(code(&o), 3);
}

#[test]
fn parse_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("broken.cd");
    std::fs::write(&bad, "classdiagram D\nclass A {\n  attr x Int\n}\n").unwrap();
    let o = viewnet(&["parse", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(!o.stderr.is_empty());

    let ok = viewnet(&["parse", corpus("atm/User_Interface.cd").to_str().unwrap()]);
    assert_eq!(code(&ok), 0);
    assert_eq!(code(&viewnet(&["parse", "/no/such/file.dol"])), 3);
    assert_eq!(code(&viewnet(&["check", "--bogus"])), 3);
}

#[test]
fn graph_output_is_stable() {
    let dol = corpus("atm/atm.dol");
    let a = viewnet(&["graph", dol.to_str().unwrap()]);
    let b = viewnet(&["graph", dol.to_str().unwrap()]);
    assert_eq!(code(&a), 0);
    assert!(stdout(&a).starts_with("digraph"));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn version_prints_the_package_version() {
    let o = viewnet(&["version"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains(env!("CARGO_PKG_VERSION")));
}
