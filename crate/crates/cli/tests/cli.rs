use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use allab::report::validate;
use serde_json::Value;

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.conf"))
}

fn allab(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_allab"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn report(dir: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn check_pair_report_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = allab(&["check-pair", "--grid", "16"], &scenario("cat_map"), dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(dir.path());
    validate(&r).unwrap();
    let again: Value = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
    assert_eq!(again, r);
    assert_eq!(r["command"], "check-pair");
    assert_eq!(r["exit_code"], 0);
    let al = &r["stages"][0]["result"]["al"];
    assert_eq!(al["verdict"], "anosov_liouville");
    assert!((al["f_plus"]["min"].as_f64().unwrap() - 2.0).abs() < 1e-9);
    assert!(al["f_zero"]["max"].as_f64().unwrap().abs() < 1e-9);
    let text = std::fs::read_to_string(scenario("cat_map")).unwrap();
    let digest = allab::config::digest(&text);
    assert_eq!(r["config_digest"], digest.as_str());
}

#[test]
fn renders_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let out = allab(&["render"], &scenario("two_reeb"), d.path());
        assert_eq!(out.status.code(), Some(0));
    }
    for name in ["ws.svg", "wu.svg"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name}");
        let svg = String::from_utf8(x).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.matches(r#"class="compact""#).count() >= 2);
    }
    let r = report(a.path());
    assert_eq!(r["stages"][0]["result"]["files"][0]["compact_leaves"], 2);
}

#[test]
fn obstructed_foliations_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = allab(&["pre-lagrangian"], &scenario("franks_williams"), dir.path());
    assert_eq!(out.status.code(), Some(2));
    let r = report(dir.path());
    validate(&r).unwrap();
    assert_eq!(r["exit_code"], 2);
    assert_eq!(r["stages"][0]["result"]["obstruction"]["verdict"], "obstructed");
}

#[test]
fn config_errors_are_listed_together() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.conf");
    std::fs::write(&bad, "[model]\nkind = suspension\nmatrix = 2 1 1 1\ncolour = red\n[grids]\nal = many\n").unwrap();
    let out = allab(&["check-pair"], &bad, dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 4") && err.contains("colour"), "{err}");
    assert!(err.contains("line 6"), "{err}");
    assert!(!dir.path().join("report.json").exists());
}

#[test]
fn tool_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = allab(&["check-pair"], &dir.path().join("missing.conf"), dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = Command::new(env!("CARGO_BIN_EXE_allab")).arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = Command::new(env!("CARGO_BIN_EXE_allab")).arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    // a check-pair run needs a model
    let out = allab(&["check-pair"], &scenario("two_reeb"), dir.path());
    assert_eq!(out.status.code(), Some(1));
}
