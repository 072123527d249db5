use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> String {
    format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn tmp(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name)
}

fn speclat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_speclat")).args(args).output().expect("binary runs")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

fn re(v: &Value) -> f64 {
    v[0].as_f64().unwrap()
}

#[test]
fn curve_of_n2_example() {
    let o = speclat(&["curve", "--state", &data("n2_example.json")]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["genus"], 1);
    let f1 = v["coefficients"][0]["f"].as_array().unwrap();
    for (got, want) in f1.iter().zip([1.0 / 6.0, -2.0, 2.0]) {
        assert!((re(got) - want).abs() < 1e-12, "{got} vs {want}");
    }
}

#[test]
fn curve_in_rational_mode_is_exact() {
    let o = speclat(&["curve", "--state", &data("n2_canonical.json"), "--mode", "rational"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["coefficients"][1]["f"][4], "1");
    assert!(v["coefficients"][0]["f"][1].is_string());
}

#[test]
fn genus_of_degenerate_state_curve() {
    let o = speclat(&["curve", "--state", &data("all_equal.json")]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["genus"], 4);
}

#[test]
fn invalid_inputs_exit_2() {
    for args in [
        vec!["curve", "--state", &data("malformed.json")],
        vec!["curve", "--state", "/nonexistent/state.json"],
        vec!["curve", "--state", &data("n2_example.json"), "--mode", "rational"],
        vec!["sov", "--state", &data("n2_example.json"), "--tol-root", "-1"],
        vec!["verify", "--suite", "no-such-family"],
        vec!["verify", "--configs", "1x1"],
    ] {
        let o = speclat(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn sov_examples() {
    let v = json(&speclat(&["sov", "--state", &data("n2_example.json")]));
    let z = &v["points"][0]["z"];
    assert!((re(z) - 3.0).abs() < 1e-10 && z[1].as_f64().unwrap().abs() < 1e-10);
    let v = json(&speclat(&["sov", "--state", &data("n3_example.json")]));
    assert!((re(&v["points"][0]["z"]) + 5.4).abs() < 1e-10);
}

#[test]
fn degenerate_divisor_exits_3() {
    let o = speclat(&["sov", "--state", &data("all_equal.json")]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("degenerate divisor"));
    // The opt-in jitter steps off the degeneracy.
    let o = speclat(&["sov", "--state", &data("all_equal.json"), "--jitter", "--seed", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["points"].as_array().unwrap().len(), 4);
}

#[test]
fn representative_output() {
    let o = speclat(&["repr", "--state", &data("n2_example.json")]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    // (M_F)_{1,2} is monic linear in z: coefficient of z^1 is 1.
    assert!((re(&v["MF"][1][0][1]) - 1.0).abs() < 1e-10);
    let o = speclat(&["repr", "--state", &data("n2_canonical.json"), "--mode", "rational"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(json(&o)["S"][0][0].is_string());
}

#[test]
fn simulate_n3_example() {
    let out = tmp("n3.csv");
    let report = tmp("n3_report.json");
    let o = speclat(&[
        "simulate",
        "--state",
        &data("n3_example.json"),
        "--t-end",
        "1",
        "--dt",
        "1e-3",
        "--track-divisor",
        "--out",
        out.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let mut rd = csv::Reader::from_path(&out).unwrap();
    let header: Vec<String> = rd.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, ["t", "V_1", "V_2", "V_3", "V_4", "V_5", "V_6", "f_2^(1)", "z_1_re", "z_1_im"]);
    assert_eq!(rd.records().count(), 1001);
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!(r["coefficient_drift"].as_f64().unwrap() < 1e-8);
    assert!(r["invariant_drift"].as_f64().unwrap() < 1e-8);
    assert!(r["divisor_on_initial_curve"].as_f64().unwrap() < 1e-8);
}

#[test]
fn oversized_step_exits_4() {
    let o = speclat(&["simulate", "--state", &data("n3_example.json"), "--dt", "10"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn verify_subset_and_negative_control() {
    let o = speclat(&["verify", "--suite", "rmatrix-local"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["families"].as_array().unwrap().len(), 1);
    assert_eq!(v["families"][0]["family"], "rmatrix-local");
    let o = speclat(&["verify", "--suite", "rmatrix-local,rmatrix-monodromy", "--flip-r-sign"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json(&o)["pass"], false);
}

#[test]
fn full_suite_passes_and_is_deterministic() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_speclat"))
            .args(["verify", "--seed", "11"])
            .env("SPECLAT_THREADS", threads)
            .output()
            .unwrap()
    };
    let a = run("1");
    let b = run("4");
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stdout));
    assert_eq!(a.stdout, b.stdout);
}
