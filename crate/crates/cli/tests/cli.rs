use std::path::Path;
use std::process::{Command, Output};

use qrandlab::rtests::block_qstest;
use qrandlab::serial::{AnyTest, TestDocument};

fn qrandlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qrandlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Data rows of a CSV, split into fields; comment and header lines dropped.
fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn real(s: &str) -> f64 {
    s.parse().unwrap()
}

fn write_block_test(dir: &Path, depth: usize) -> String {
    let doc = TestDocument::from_test(&AnyTest::Qs(block_qstest(depth).unwrap()));
    let path = dir.join("block_test.json");
    std::fs::write(&path, serde_json::to_string(&doc).unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn tracial_profile_is_flat() {
    let o = qrandlab(&["entropy-profile", "--state", "builtin:tracial(N=10)"]);
    assert!(o.status.success());
    let csv = stdout(&o);
    assert!(csv.starts_with("# spec_hash="));
    assert!(csv.lines().nth(1) == Some("n,H,H/n"));
    let r = rows(&csv);
    assert_eq!(r.len(), 10);
    assert!(r.iter().all(|row| (real(&row[2]) - 1.0).abs() < 1e-12));
    assert!(csv.lines().last().unwrap().starts_with("# rate_estimate window=5"));
}

#[test]
fn tensor_power_rate_is_binary_entropy() {
    let o = qrandlab(&["entropy-profile", "--state", "builtin:tensor_power(p=0.9)", "--depth", "20"]);
    assert!(o.status.success());
    let h = -(0.9f64 * 0.9f64.log2() + 0.1 * 0.1f64.log2());
    for row in rows(&stdout(&o)) {
        assert!((real(&row[2]) - h).abs() < 1e-12);
    }
}

#[test]
fn block_profile_hits_closed_form_at_block_ends() {
    let o = qrandlab(&["entropy-profile", "--state", "builtin:block(N=20)"]);
    let r = rows(&stdout(&o));
    // H(ρ_ξ(m)) = ξ(m) − m with ξ(m) = m(m+3)/2
    for (m, xi) in [(3, 9), (4, 14), (5, 20)] {
        assert!((real(&r[xi - 1][1]) - (xi - m) as f64).abs() < 1e-9);
    }
    assert!(real(&r[19][2]) > real(&r[8][2]));
}

#[test]
fn replay_is_byte_identical() {
    let args = ["entropy-profile", "--state", "builtin:pure(seed=3,N=12)"];
    assert_eq!(qrandlab(&args).stdout, qrandlab(&args).stdout);
    let other = qrandlab(&["entropy-profile", "--state", "builtin:pure(seed=4,N=12)"]);
    let hash = |o: &Output| stdout(o).lines().next().unwrap().to_string();
    assert_ne!(hash(&qrandlab(&args)), hash(&other));
}

#[test]
fn json_format_carries_hash_and_rows() {
    let o = qrandlab(&["ui-profile", "--state", "builtin:tracial(N=12)", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["spec_hash"].as_str().unwrap().len(), 16);
    assert_eq!(v["rows"][2]["modulus"], 4);
}

#[test]
fn pure_state_deficiency_test_certifies_every_term() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.json");
    let o = qrandlab(&[
        "build-test", "--state", "builtin:pure(seed=7,N=24)", "--theta", "1/2", "--delta", "0.5",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let certs = v["certificates"].as_array().unwrap();
    assert_eq!(certs.len(), 8);
    assert!(certs.iter().all(|c| c["holds"] == true && c["rho"].as_f64().unwrap() > 0.5));
    assert_eq!(v["validation"]["status"], "verified");

    let e = qrandlab(&["evaluate", "--state", "builtin:pure(seed=7,N=24)", "--test", out.to_str().unwrap()]);
    assert!(e.status.success());
    assert!(rows(&stdout(&e)).iter().all(|r| r[4] == "true"));
}

#[test]
fn tracial_search_exhausts_with_exit_3() {
    for builder in ["deficiency", "s"] {
        let o = qrandlab(&["build-test", "--state", "builtin:tracial(N=20)", "--builder", builder]);
        assert_eq!(o.status.code(), Some(3), "{builder}");
        let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(v["exhausted"].as_array().unwrap().len(), 8);
    }
}

#[test]
fn pure_state_fails_its_s_test_everywhere() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.json");
    let state = "builtin:pure(pattern=0110,N=24)";
    let o = qrandlab(&["build-test", "--state", state, "--builder", "s", "--s", "0.9", "--t", "1/2", "--terms", "5", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let e = qrandlab(&["evaluate", "--state", state, "--test", out.to_str().unwrap(), "--delta", "0.5"]);
    let r = rows(&stdout(&e));
    assert_eq!(r.len(), 5);
    assert!(r.iter().all(|row| row[4] == "true"));
}

#[test]
fn block_state_carries_full_weight_on_its_test() {
    let dir = tempfile::tempdir().unwrap();
    let test = write_block_test(dir.path(), 5);
    let o = qrandlab(&["evaluate", "--state", "builtin:block(N=20)", "--test", &test]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 5);
    assert!(r.iter().all(|row| (real(&row[3]) - 1.0).abs() < 1e-10));
}

#[test]
fn tracial_weight_equals_tau() {
    let dir = tempfile::tempdir().unwrap();
    let test = write_block_test(dir.path(), 5);
    let o = qrandlab(&["evaluate", "--state", "builtin:tracial(N=20)", "--test", &test]);
    for row in rows(&stdout(&o)) {
        assert!((real(&row[2]) - real(&row[3])).abs() < 1e-15);
        assert_eq!(row[4], "false");
    }
}

#[test]
fn ui_moduli() {
    let moduli = |state: &str| -> Vec<String> {
        rows(&stdout(&qrandlab(&["ui-profile", "--state", state, "--depth", "20"])))
            .into_iter()
            .map(|r| r[1].clone())
            .collect()
    };
    assert_eq!(moduli("builtin:tracial"), ["1", "2", "4"]);
    assert_eq!(moduli("builtin:pure(seed=2)"), ["", "", ""]);
    // ∫₀^ε f₂ = 1/(1 − ln ε) ≤ δ first holds at ε = 2^{-m}, m = ⌈(1/δ − 1)/ln 2⌉
    let expected: Vec<String> = [0.5f64, 0.25, 0.1]
        .iter()
        .map(|d| ((1.0 / d - 1.0) / std::f64::consts::LN_2).ceil().to_string())
        .collect();
    assert_eq!(moduli("builtin:measure(f=f2)"), expected);
}

#[test]
fn invalid_state_exits_2() {
    let o = qrandlab(&["entropy-profile", "--state", "builtin:tensor_power(p=1.5,N=3)"]);
    assert_eq!(o.status.code(), Some(2));
    let o = qrandlab(&["entropy-profile", "--state", "{\"not\": \"a state\"}"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reproduce_writes_bundle_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let ok = dir.path().join("svd");
    let o = qrandlab(&["reproduce", "svd-bound", "--seed", "9", "--out", ok.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let summary = std::fs::read_to_string(ok.join("summary.txt")).unwrap();
    assert!(summary.lines().skip(1).all(|l| l.starts_with("PASS")));
    assert_eq!(rows(&std::fs::read_to_string(ok.join("svd_bound.csv")).unwrap()).len(), 1000);

    let bad = dir.path().join("decay");
    let o = qrandlab(&["reproduce", "typical-decay", "--out", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stdout(&o).contains("FAIL"));
}
