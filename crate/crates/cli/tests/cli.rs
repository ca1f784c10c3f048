use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcsp")).args(args).output().expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON document")
}

fn fixture(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("pcsp-cli-tests-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn rxxx() -> PathBuf {
    fixture("rxxx.json", r#"{"domain":["x"],"relations":[{"name":"R","arity":3,"tuples":[[0,0,0]]}]}"#)
}

#[test]
fn analyze_one_in_three() {
    let out = run(&["analyze", "--structure", "one_in_three"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    for flag in ["symmetric", "functional", "balanced", "super_connected"] {
        assert_eq!(r["result"][flag], true, "{flag}");
    }
    assert_eq!(r["exit_code"], 0);
}

#[test]
fn classify_exit_codes() {
    let out = run(&["classify", "--A", "one_in_three", "--B", "eqn(3,1)"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["result"]["outcome"]["verdict"], "tractable");
    assert_eq!(r["result"]["outcome"]["m"], 3);

    let out = run(&["classify", "--A", "one_in_three", "--B", "one_in_three"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(report(&out)["result"]["outcome"]["verdict"], "np_hard");

    // a lowered bound never claims hardness
    let out = run(&["classify", "--A", "one_in_three", "--B", "one_in_three", "--m-max", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(report(&out)["result"]["outcome"]["verdict"], "inconclusive");
}

#[test]
fn relax_separates_on_repeated_variable() {
    let x = rxxx();
    let x = x.to_str().unwrap();
    for (method, code) in [("blp", 0), ("aip", 1), ("blp+aip", 1)] {
        let out = run(&["relax", "--method", method, "--template", "one_in_three", "--instance", x]);
        assert_eq!(out.status.code(), Some(code), "{method}");
        assert_eq!(report(&out)["result"]["accepted"], code == 0);
    }
}

#[test]
fn solve_emits_a_homomorphism() {
    let out = run(&["solve", "--A", "one_in_three", "--B", "eqn(3,1)", "--instance", "one_in_three"]);
    assert_eq!(out.status.code(), Some(0));
    let h = report(&out)["result"]["homomorphism"].clone();
    let h: Vec<u64> = serde_json::from_value(h).unwrap();
    assert_eq!(h.len(), 2);
    // 1-in-3 tuples must land on x + y + z = 1 mod 3
    assert_eq!((2 * h[0] + h[1]) % 3, 1);
}

#[test]
fn poly_and_derive() {
    let out = run(&["poly", "--A", "one_in_three", "--B", "eqn(3,1)", "--arity", "3"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["result"]["count"], 27);

    let out = run(&["derive", "--structure", "one_in_three", "--premises", "gamma", "--target", "1,1,0"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["result"]["derivable"], true);
}

#[test]
fn catalog_lists_and_resolves_keys() {
    let out = run(&["catalog"]);
    assert_eq!(out.status.code(), Some(0));
    let entries = report(&out)["result"]["entries"].as_array().unwrap().len();
    assert!(entries >= 11);
    let out = run(&["catalog", "eqn(2,1)"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn reruns_are_byte_identical() {
    let x = rxxx();
    let x = x.to_str().unwrap();
    for args in [
        vec!["analyze", "--structure", "remark_4_4_a1"],
        vec!["classify", "--A", "one_in_three", "--B", "eqn(3,1)"],
        vec!["relax", "--method", "blp", "--template", "one_in_three", "--instance", x],
    ] {
        let first = run(&args);
        let second = run(&args);
        assert_eq!(first.stdout, second.stdout, "{args:?}");
        assert!(!first.stdout.is_empty());
    }
}

#[test]
fn usage_errors_exit_64() {
    for args in [
        vec!["bogus"],
        vec!["analyze"],
        vec!["analyze", "--structure", "no_such_template"],
        vec!["relax", "--method", "simplex", "--template", "nae", "--instance", "nae"],
    ] {
        assert_eq!(run(&args).status.code(), Some(64), "{args:?}");
    }
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn malformed_input_is_a_data_error() {
    let bad = fixture("bad.json", r#"{"domain":["a"],"relations":[{"name":"R","arity":2,"tuples":[[0,5]]}]}"#);
    let out = run(&["analyze", "--structure", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(65));
    assert!(report(&out)["error"].is_string());
}
