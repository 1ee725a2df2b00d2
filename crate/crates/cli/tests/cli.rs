use std::path::Path;
use std::process::{Command, Output};

fn btfsm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_btfsm"))
        .args(args)
        .env_remove("BTFSM_FIXTURES")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn build_prints_counts_and_writes_policy() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bt");
    let o = btfsm(&["build", "--repr", "bt", "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "14 nodes, 13 edges");
    assert!(out.join("policy.pol").exists());
    assert!(out.join("graph.dot").exists());

    let o = btfsm(&["build", "--repr", "fsm"]);
    assert_eq!(stdout(&o).trim(), "6 nodes, 18 edges");
}

#[test]
fn built_policy_document_reparses() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fsm");
    btfsm(&["build", "--repr", "fsm", "--out", path(&out)]);
    let doc = out.join("policy.pol");
    let o = btfsm(&["build", "--repr", "fsm", "--doc", path(&doc)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "6 nodes, 18 edges");
}

#[test]
fn empty_goal_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let doc = dir.path().join("empty.pol");
    std::fs::write(&doc, "condition a()\n").unwrap();
    let o = btfsm(&["build", "--doc", path(&doc)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("goal"));
}

#[test]
fn parse_errors_report_positions() {
    let dir = tempfile::tempdir().unwrap();
    let doc = dir.path().join("bad.pol");
    std::fs::write(&doc, "condition a()\nskill s() pre=[b()] duration=1\n").unwrap();
    let o = btfsm(&["build", "--doc", path(&doc)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("2:16"));
}

#[test]
fn edit_reports_eight_operations_for_both() {
    for (repr, size) in [("bt", "18 nodes, 17 edges"), ("fsm", "7 nodes, 25 edges")] {
        let o = btfsm(&["edit", "--repr", repr, "--script", "add-recharge"]);
        assert_eq!(o.status.code(), Some(0));
        let s = stdout(&o);
        assert!(s.contains("8 elementary operations"), "{s}");
        assert!(s.contains(size), "{s}");
    }
    let o = btfsm(&["edit", "--script", "frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn metrics_between_exported_graphs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    btfsm(&["build", "--repr", "bt", "--out", path(&a)]);
    btfsm(&["edit", "--repr", "bt", "--script", "add-recharge", "--out", path(&b)]);
    let ga = a.join("graph.dot");
    let gb = b.join("graph.dot");
    let o = btfsm(&["metrics", path(&ga), path(&gb), "--format", "record"]);
    assert_eq!(o.status.code(), Some(0));
    let rec: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rec["ged"]["distance"], 8.0);
    assert_eq!(rec["ged"]["exact"], true);

    let o = btfsm(&["metrics", path(&ga), path(&ga)]);
    assert!(stdout(&o).contains("GED=0"));

    let fa = dir.path().join("fsm");
    btfsm(&["build", "--repr", "fsm", "--out", path(&fa)]);
    let o = btfsm(&["metrics", path(&fa.join("graph.dot"))]);
    assert!(stdout(&o).contains("CC=14"), "{}", stdout(&o));
}

#[test]
fn run_writes_traces_and_outcomes() {
    let dir = tempfile::tempdir().unwrap();
    let o = btfsm(&[
        "run",
        "--repr",
        "fsm-seq",
        "--scenario",
        "pick_failure",
        "--out",
        path(dir.path()),
        "--format",
        "record",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let runs: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(runs[0]["outcome"], "failure");
    let trace = std::fs::read_to_string(dir.path().join("pick_failure.trace.jsonl")).unwrap();
    assert!(trace.lines().count() > 1);

    let o = btfsm(&["run", "--repr", "fsm", "--scenario", "pick_failure"]);
    assert!(stdout(&o).contains("Success"));

    let o = btfsm(&["run", "--scenario", "nowhere"]);
    assert_eq!(o.status.code(), Some(2));
    let o = btfsm(&["run", "--budget", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reproduce_passes_and_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let o = btfsm(&["reproduce", "all", "--out", path(&a)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    btfsm(&["reproduce", "all", "--out", path(&b), "--parallel"]);
    for exp in ["exp1", "exp2", "exp3", "scale"] {
        let x = std::fs::read(a.join(format!("{exp}.json"))).unwrap();
        let y = std::fs::read(b.join(format!("{exp}.json"))).unwrap();
        assert_eq!(x, y, "{exp}");
    }
}

#[test]
fn reproduce_mismatch_exits_one() {
    // A fixture set whose baseline task has an extra goal changes every count.
    let dir = tempfile::tempdir().unwrap();
    let text = btfsm_fixture().replace("goal object_at(cube, delivery)", "goal object_at(cube, delivery)\ngoal robot_at(inspection)");
    std::fs::write(dir.path().join("fetch_task.pol"), text).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_btfsm"))
        .args(["reproduce", "exp1"])
        .env("BTFSM_FIXTURES", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("expected 14"));
}

fn btfsm_fixture() -> String {
    std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../core/fixtures/fetch_task.pol")).unwrap()
}
