use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn midecon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_midecon")).args(args).env("RUST_LOG", "warn").output().unwrap()
}

fn synth(out: &Path) -> Output {
    midecon(&["synth", "--seed", "3", "--fingers", "2", "--impressions", "2", "--out", out.to_str().unwrap()])
}

#[test]
fn synth_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(synth(a.path()).status.success());
    assert!(synth(b.path()).status.success());
    for rel in ["manifest.csv", "images/f001_i1.pgm", "templates/f002_i2.tpl"] {
        assert_eq!(fs::read(a.path().join(rel)).unwrap(), fs::read(b.path().join(rel)).unwrap(), "{rel}");
    }
}

#[test]
fn self_match_prints_one() {
    let d = tempfile::tempdir().unwrap();
    assert!(synth(d.path()).status.success());
    let t = d.path().join("templates/f001_i1.tpl");
    let out = midecon(&["match", t.to_str().unwrap(), t.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "1.000000");
}

#[test]
fn missing_model_is_a_usage_error() {
    let out = midecon(&["erc", "--data", "nowhere"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--model"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(midecon(&["synth", "--no-such-flag", "1"]).status.code(), Some(2));
}

#[test]
fn runtime_failure_is_one_line_and_exit_one() {
    let out = midecon(&["match", "/nonexistent/a.tpl", "/nonexistent/b.tpl"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    let line = err.lines().last().unwrap();
    assert!(line.starts_with("midecon: error[io]:"), "{err}");
}

#[test]
fn bad_config_value_is_rejected() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("run.cfg");
    fs::write(&cfg, "fingers = 2\nimpressions = many\n").unwrap();
    let out = midecon(&["synth", "--config", cfg.to_str().unwrap(), "--out", d.path().join("o").to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error["));
}
