//! Calls through the C ABI exactly as a C caller would.

use std::ffi::{c_char, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use matlql_ffi::*;

fn last_error() -> String {
    unsafe {
        let n = matlql_last_error_message(ptr::null_mut(), 0);
        let mut buf = vec![0u8; n];
        matlql_last_error_message(buf.as_mut_ptr().cast::<c_char>(), n);
        String::from_utf8(buf[..n - 1].to_vec()).unwrap()
    }
}

const TOY: &str = "
env = toy
seeds = 1-3
train_episodes = 40
exec_episodes = 5
rate = constant 0.1
agent.0.algorithm = matlql
agent.0.advisor = always action=0
agent.0.advisor = uniform-random
";

fn parse(text: &str) -> (MatlqlStatus, *mut MatlqlConfig) {
    let text = CString::new(text).unwrap();
    let mut cfg = ptr::null_mut();
    let status = unsafe { matlql_config_parse(text.as_ptr(), ptr::null(), &mut cfg) };
    (status, cfg)
}

#[test]
fn config_lifecycle_and_errors() {
    let (status, cfg) = parse(TOY);
    assert_eq!(status, MatlqlStatus::Ok);
    assert_eq!(last_error(), "");
    unsafe {
        assert_eq!(matlql_config_arm_count(cfg), 1);
        assert_eq!(matlql_config_seed_count(cfg), 3);
        assert_eq!(matlql_config_seed_count(ptr::null()), 0);
        matlql_config_free(cfg);
        matlql_config_free(ptr::null_mut());
    }

    let (status, cfg) = parse("env = toy\nagent.0.algorithm = nope\n");
    assert_eq!(status, MatlqlStatus::Config);
    assert!(cfg.is_null());
    assert!(last_error().contains("unknown algorithm `nope`"));

    let (status, _) = parse("not a key value line");
    assert_eq!(status, MatlqlStatus::Parse);

    let status = unsafe { matlql_config_parse(ptr::null(), ptr::null(), &mut ptr::null_mut()) };
    assert_eq!(status, MatlqlStatus::NullPointer);

    let bad = [0x66u8, 0xff, 0];
    let status = unsafe { matlql_config_parse(bad.as_ptr().cast(), ptr::null(), &mut ptr::null_mut()) };
    assert_eq!(status, MatlqlStatus::InvalidUtf8);
}

#[test]
fn run_writes_outputs() {
    let (_, cfg) = parse(TOY);
    let dir = tempfile::tempdir().unwrap();
    let out = CString::new(dir.path().to_str().unwrap()).unwrap();
    unsafe {
        assert_eq!(matlql_run(cfg, out.as_ptr()), MatlqlStatus::Ok, "{}", last_error());
        matlql_config_free(cfg);
    }
    assert!(dir.path().join("summary.csv").is_file());
    assert!(dir.path().join("default/train_seed_2.csv").is_file());
}

#[test]
fn trainer_handle() {
    let (_, cfg) = parse(TOY);
    unsafe {
        let mut t = ptr::null_mut();
        assert_eq!(matlql_trainer_new(cfg, 5, 1, &mut t), MatlqlStatus::OutOfRange);
        assert_eq!(matlql_trainer_new(cfg, 0, 1, &mut t), MatlqlStatus::Ok);
        matlql_config_free(cfg);
        assert_eq!(matlql_trainer_num_agents(t), 1);
        let mut ret = [f64::NAN; 1];
        for _ in 0..30 {
            assert_eq!(matlql_trainer_run_episode(t, 1, ret.as_mut_ptr(), 1), MatlqlStatus::Ok);
            assert!(ret[0].is_finite());
        }
        assert_eq!(matlql_trainer_run_episode(t, 0, ret.as_mut_ptr(), 0), MatlqlStatus::OutOfRange);
        let mut needed = 0usize;
        assert_eq!(matlql_trainer_checkpoint(t, 0, ptr::null_mut(), 0, &mut needed), MatlqlStatus::Ok);
        let mut buf = vec![0u8; needed];
        assert_eq!(matlql_trainer_checkpoint(t, 0, buf.as_mut_ptr().cast(), needed, &mut needed), MatlqlStatus::Ok);
        let text = std::str::from_utf8(&buf[..needed - 1]).unwrap();
        assert!(text.contains("LOW"));
        assert_eq!(matlql_trainer_checkpoint(t, 1, ptr::null_mut(), 0, &mut needed), MatlqlStatus::OutOfRange);
        matlql_trainer_free(t);
    }
}

#[test]
fn calculators() {
    unsafe {
        let mut passed = 0;
        assert_eq!(matlql_golden_trace(&mut passed), MatlqlStatus::Ok);
        assert_eq!(passed, 1);

        let mut m = 0u64;
        assert_eq!(matlql_iterations_for_accuracy(10.0, 0.05, 0.1, &mut m), MatlqlStatus::Ok);
        assert_eq!(m, 93);
        assert_eq!(matlql_iterations_for_accuracy(-1.0, 0.05, 0.1, &mut m), MatlqlStatus::Domain);

        let x = MatlqlBoundInputs {
            covering_time: 26.0,
            q_max: 10.0,
            state_count: 100.0,
            action_product: 4.0,
            delta: 0.05,
            epsilon: 0.1,
            gamma: 0.9,
            omega: 0.77,
            psi: 0.712,
        };
        let mut b = MatlqlBounds::default();
        assert_eq!(matlql_bounds(&x, &mut b), MatlqlStatus::Ok);
        assert_eq!(b.iterations, 93);
        assert!(b.ln_linear > b.ln_polynomial);
        let bad = MatlqlBoundInputs { omega: 0.2, ..x };
        assert_eq!(matlql_bounds(&bad, &mut b), MatlqlStatus::Config);
        assert!(last_error().contains("omega"));

        let (a, c) = ([1.0, 2.0, 3.0, 4.0, 5.0], [2.0, 3.0, 4.0, 5.0, 6.0]);
        let mut w = MatlqlWelch::default();
        assert_eq!(matlql_welch_t_test(a.as_ptr(), 5, c.as_ptr(), 5, &mut w), MatlqlStatus::Ok);
        assert!((w.p - 0.3465935070873).abs() < 1e-9);
        assert_eq!(matlql_welch_t_test(a.as_ptr(), 1, c.as_ptr(), 5, &mut w), MatlqlStatus::Domain);
    }
}

#[test]
fn header_compiles_as_c() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        r#"#include "matlql.h"
int main(void) {
    MatlqlConfig *cfg = 0;
    MatlqlStatus s = matlql_config_parse("env = toy", 0, &cfg);
    MatlqlTrainer *t = 0;
    if (s == MATLQL_STATUS_OK) s = matlql_trainer_new(cfg, 0, 1, &t);
    double r[1];
    matlql_trainer_run_episode(t, 1, r, 1);
    MatlqlBounds b; MatlqlBoundInputs x = {0};
    matlql_bounds(&x, &b);
    char msg[256];
    matlql_last_error_message(msg, sizeof msg);
    matlql_trainer_free(t);
    matlql_config_free(cfg);
    return (int)s;
}
"#,
    )
    .unwrap();
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(root.join("include"))
        .arg(&src)
        .status()
        .unwrap();
    assert!(status.success());
}
