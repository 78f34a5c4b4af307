use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn aloha(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aloha"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = aloha(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("aloha-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn region<'a>(doc: &'a Value, name: &str) -> &'a Value {
    doc["regions"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["region"] == name)
        .unwrap()
}

#[test]
fn member_reports_every_region() {
    let doc = json(&["member", "--x", "0.192,0.052", "--c", "2"]);
    assert_eq!(doc["config"]["command"], "member");
    assert_eq!(doc["version"], aloha_core::VERSION);
    assert_eq!(region(&doc, "lambda")["status"], "member");
    let w: Vec<f64> = serde_json::from_value(region(&doc, "lambda")["witness"].clone()).unwrap();
    // independent check of the witness: xᵢ ≤ pᵢ(1 − p_other)
    assert!(w[0] * (1.0 - w[1]) >= 0.192 - 1e-9);
    assert!(w[1] * (1.0 - w[0]) >= 0.052 - 1e-9);

    let doc = json(&["member", "--x", "0.3,0.3"]);
    assert_eq!(region(&doc, "lambda")["status"], "non-member");
    assert_eq!(region(&doc, "srs")["member"], false);
}

#[test]
fn ball_complement_is_null_outside_the_cube() {
    let doc = json(&["member", "--x", "1.5,0"]);
    assert!(region(&doc, "bc")["member"].is_null());
    assert_eq!(region(&doc, "lambda")["member"], false);
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(aloha(&["fig", "regions", "--n", "3"]).status.code(), Some(2));
    assert_eq!(aloha(&["volume", "--n", "2..7"]).status.code(), Some(2));
    assert_eq!(aloha(&["member", "--x", "0.1,0.1", "--n", "3"]).status.code(), Some(2));
    assert_eq!(aloha(&["member", "--x", "0.1,-0.1"]).status.code(), Some(2));
    assert_eq!(aloha(&["member", "--x", "0.1,0.1,0.1", "--c", "0.2"]).status.code(), Some(2));
    assert_eq!(aloha(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(aloha(&["fig", "controls"]).status.code(), Some(2));
}

#[test]
fn volume_table_matches_exact_values() {
    let doc = json(&["volume", "--n", "2..3", "--samples", "2e4", "--seed", "9"]);
    assert_eq!(doc["exact"][0]["lambda"], "1/6");
    assert_eq!(doc["exact"][1]["lambda"], "13/630");
    for row in doc["rows"].as_array().unwrap() {
        if row["estimator"] == "inner_mc" || row["estimator"] == "outer_mc" {
            let n = row["n"].as_u64().unwrap() as usize;
            let exact = [1.0 / 6.0, 13.0 / 630.0][n - 2];
            let (m, se) = (row["mean"].as_f64().unwrap(), row["std_error"].as_f64().unwrap());
            // the c = 100 ellipsoids are close to Λ in volume
            assert!((m - exact).abs() < 0.35 * exact + 5.0 * se, "{row}");
        }
    }
}

#[test]
fn outputs_are_deterministic_across_thread_counts() {
    let args = ["conjecture", "--n", "3", "--starts", "64", "--samples", "3000", "--format", "csv"];
    let one = aloha(&[&args[..], &["--threads", "1"]].concat());
    let many = aloha(&[&args[..], &["--threads", "4"]].concat());
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, many.stdout);
}

#[test]
fn replay_reproduces_json_and_csv_bit_for_bit() {
    for (fmt, args) in [
        ("json", vec!["volume", "--n", "2..3", "--samples", "5000"]),
        ("csv", vec!["controls", "--x", "0.2,0.1", "--samples", "200"]),
        ("csv", vec!["fig", "regions", "--c", "0.55", "--resolution", "20"]),
    ] {
        let path = tmp(&format!("{}.{fmt}", args[0]));
        let p = path.to_str().unwrap();
        let mut full = args.clone();
        full.extend(["--format", fmt, "--out", p, "--seed", "77"]);
        assert_eq!(aloha(&full).status.code(), Some(0));
        let first = std::fs::read(&path).unwrap();
        let again = tmp(&format!("{}-again.{fmt}", args[0]));
        let out = aloha(&["replay", p, "--out", again.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
        // the only difference allowed is the recorded output path
        let second = String::from_utf8(std::fs::read(&again).unwrap()).unwrap();
        let first = String::from_utf8(first).unwrap();
        assert_eq!(first, second.replace(again.to_str().unwrap(), p));
        assert_eq!(aloha(&["replay", p]).status.code(), Some(0));
        assert_eq!(std::fs::read_to_string(&path).unwrap(), first);
    }
}

#[test]
fn csv_output_has_comment_header_and_columns() {
    let out = aloha(&["fig", "controls", "--x", "0.192,0.052", "--resolution", "50", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# aloha "));
    assert!(lines[1].starts_with("# rng "));
    assert!(lines[2].starts_with("# config {"));
    assert_eq!(lines[3], "p1,p2_lower,p2_upper");
    assert!(lines.len() > 10);
    for line in &lines[4..] {
        let v: Vec<f64> = line.split(',').map(|t| t.parse().unwrap()).collect();
        assert!(v[1] <= v[2]);
        // both ends satisfy the two-user constraints
        for p2 in [v[1], v[2]] {
            assert!(v[0] * (1.0 - p2) >= 0.192 - 1e-6);
            assert!(p2 * (1.0 - v[0]) >= 0.052 - 1e-6);
        }
    }
}

#[test]
fn region_figure_curves_are_named() {
    let doc = json(&["fig", "regions", "--c", "2", "--resolution", "30"]);
    let names: Vec<&str> = doc["curves"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["lambda", "srs", "bc", "inner", "outer"]);
}

#[test]
fn infeasible_controls_skip_probes() {
    let doc = json(&["controls", "--x", "0.3,0.3"]);
    assert_eq!(doc["verdict"]["status"], "non-member");
    assert!(doc["convexity"].is_null());
}
