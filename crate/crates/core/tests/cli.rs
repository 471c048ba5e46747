//! The `matlql` binary end to end: outputs, messages and exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn matlql(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_matlql")).args(args).output().unwrap()
}

fn config(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
        .display()
        .to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_writes_outputs_and_report_rereads_them() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("toy");
    let o = matlql(&["run", &config("toy.cfg"), "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("outputs written to"));
    for f in [
        "manifest.txt",
        "summary.csv",
        "comparisons.csv",
        "advisor_frequency.csv",
        "train_return_agent0.svg",
        "exec_win_agent0.svg",
        "matlql/train_seed_1.csv",
        "tlql/exec_seed_30.csv",
    ] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let r = matlql(&["report", path(&out)]);
    assert_eq!(r.status.code(), Some(0), "{}", stderr(&r));
    assert!(stdout(&r).contains("tlql"));
}

#[test]
fn golden_trace_passes() {
    let o = matlql(&["golden-trace"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).trim_end().ends_with("golden trace PASSED"));
}

#[test]
fn bounds_calculator() {
    let args = ["bounds", "L=26", "qmax=10", "states=100", "actions=4", "delta=0.05", "eps=0.1", "gamma=0.9"];
    let o = matlql(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("iterations to reach eps: 93"), "{text}");
    assert!(text.contains("beta = 0.050000"), "{text}");

    let o = matlql(&["bounds", "L=26", "qmax=10"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("missing `eps`"));
    let o = matlql(&["bounds", "L=26", "qmax=10", "states=1", "actions=1", "delta=0.05", "eps=0.1", "gamma=0.9", "omega=0.3"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn oracle_and_covering_time() {
    let o = matlql(&["nash-oracle", &config("coordination.cfg")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("fixed-point residual"));
    assert_eq!(stdout(&o).matches("state ").count(), 3);

    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("cover.csv");
    let o = matlql(&["covering-time", &config("coordination.cfg"), "--trials", "20", "--csv", path(&csv)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 21);
}

#[test]
fn exit_codes_for_bad_input() {
    assert_eq!(matlql(&["--help"]).status.code(), Some(0));
    assert_eq!(matlql(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(matlql(&["run", "/definitely/not/here.cfg"]).status.code(), Some(1));

    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.cfg");
    std::fs::write(&bad, "env = toy\nagent.0.algorithm = nonsense\nwhat = 3\n").unwrap();
    let o = matlql(&["run", path(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("unknown algorithm `nonsense`") && err.contains("unknown key `what`"), "{err}");

    let o = matlql(&["report", path(tmp.path())]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}
