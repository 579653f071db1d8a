use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn sedlab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sedlab")).current_dir(dir).args(args).output().unwrap()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn checksums_match(dir: &Path) {
    let m = manifest(dir);
    let outputs = m["outputs"].as_array().unwrap();
    assert!(!outputs.is_empty());
    for o in outputs {
        let bytes = fs::read(dir.join(o["path"].as_str().unwrap())).unwrap();
        assert_eq!(o["bytes"].as_u64().unwrap() as usize, bytes.len());
        assert_eq!(o["sha256"].as_str().unwrap(), hex::encode(Sha256::digest(&bytes)));
    }
}

#[test]
fn solve_without_inclusions_from_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("zero.cfg"), "# no inclusions\nd = 3\nn = 32\nT = 100\nlambda = 0\n").unwrap();
    let out = sedlab(tmp.path(), &["solve", "--config", "zero.cfg", "--out", "z"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(summary["manifest"].as_str().unwrap().ends_with("manifest.json"));
    let m = manifest(&tmp.path().join("z"));
    assert_eq!(m["results"]["max_abs_u"].as_f64(), Some(0.0));
    assert_eq!(m["config"]["T"], "100.0");
    assert!(!m["warnings"].as_array().unwrap().is_empty());
}

#[test]
fn sampling_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    for dir in ["a", "b"] {
        let out = sedlab(tmp.path(), &["sample", "--d", "2", "--L", "30", "--lambda=2", "--seed", "17", "--out", dir]);
        assert!(out.status.success());
    }
    let a = fs::read(tmp.path().join("a/points.csv")).unwrap();
    let b = fs::read(tmp.path().join("b/points.csv")).unwrap();
    assert_eq!(a, b);
    checksums_match(&tmp.path().join("a"));
    let m = manifest(&tmp.path().join("a"));
    assert!(m["results"]["min_distance"].as_f64().unwrap() >= 2f64.sqrt() + 1.0);
}

#[test]
fn usage_errors_exit_2_without_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 3] = [
        &["solve", "--n", "8", "--colour", "red", "--out", "x"],
        &["ensemble", "--d", "3", "--n", "16", "--T", "64", "--scaling_claim", "true", "--out", "x"],
        &["sweep", "--d", "3", "--n", "8", "--t_list", "64,16", "--out", "x"],
    ];
    for args in cases {
        let out = sedlab(tmp.path(), args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        let err: Value = serde_json::from_slice(&out.stderr).unwrap();
        assert!(err["error"]["message"].is_string());
        assert!(!tmp.path().join("x").exists());
    }
}

#[test]
fn linearized_sweep_writes_table_and_fit() {
    let tmp = tempfile::tempdir().unwrap();
    let out = sedlab(
        tmp.path(),
        &[
            "sweep", "--mode", "linearized", "--d", "3", "--n", "4", "--h", "1", "--raster", "relaxed",
            "--box_rule", "2", "--scaling_claim", "true", "--t_list", "4,16,64", "--realizations", "2",
            "--out", "sw",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("sw");
    let table = fs::read_to_string(dir.join("sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);
    let m = manifest(&dir);
    assert_eq!(m["results"]["fit"]["statistic"], "var_ui");
    assert!(m["results"]["fit"]["exponent"].is_number());
    assert!(m["timings"]["sweep"].as_f64().unwrap() >= 0.0);
    checksums_match(&dir);
}

#[test]
fn oracles() {
    let tmp = tempfile::tempdir().unwrap();
    let out = sedlab(tmp.path(), &["oracle", "--check", "radial", "--d", "3", "--T", "100", "--out", "r"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(&tmp.path().join("r"));
    assert!(m["results"]["residual"].as_f64().unwrap() <= 1e-10);
    let profile = fs::read_to_string(tmp.path().join("r/profile.csv")).unwrap();
    assert_eq!(profile.lines().next(), Some("r,v"));

    let out = sedlab(
        tmp.path(),
        &["oracle", "--check", "dense", "--d", "2", "--n", "8", "--h", "0.5", "--raster", "relaxed", "--cg_tol", "1e-12", "--out", "dn"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(&tmp.path().join("dn"));
    assert!(m["results"]["relative_error"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn field_dump_is_listed() {
    let tmp = tempfile::tempdir().unwrap();
    let out = sedlab(
        tmp.path(),
        &["linearized", "--d", "3", "--n", "16", "--h", "1", "--raster", "relaxed", "--T", "16", "--dump_field", "true", "--out", "f"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("f");
    let bytes = fs::read(dir.join("field.bin")).unwrap();
    assert_eq!(&bytes[..4], b"CLSF");
    assert_eq!(bytes.len(), 4 + 4 + 24 + 8 * 16usize.pow(3));
    checksums_match(&dir);
}
