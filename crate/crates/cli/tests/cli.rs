use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(format!("{name}.txt"))
}

fn topodof(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_topodof")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

const QUOTED: &str = r#"{"m":1,"n":3,"rows":["100","010","101","101","110","010"]}"#;

#[test]
fn bounds_json_for_pentagon() {
    let out = topodof(&["bounds", fixture("pentagon").to_str().unwrap(), "--json"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["outer"], "2/5");
    assert_eq!(v["ia"], "2/5");
    assert_eq!(v["rgc"], "1/3");
    assert_eq!(v["tight"], true);
    assert!(v.get("certificates").is_none());
}

#[test]
fn certificates_flag_and_csv() {
    let path = fixture("fractional_gap");
    let out = topodof(&["bounds", path.to_str().unwrap(), "--json", "--certificates"]);
    let v = json(&out);
    assert_eq!(v["outer"], "2/7");
    let c = &v["certificates"]["outer"];
    assert_eq!(c["S"].as_array().unwrap().len(), c["A"].as_array().unwrap().len());
    assert!(!c["fractional"].as_array().unwrap().is_empty());

    let out = topodof(&["bounds", path.to_str().unwrap(), "--csv", "--plain-outer", "--node-budget", "100000"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("canonical_hash,k,cross_links,outer,rgc,ia,src,best,tight,gain_rgc,gain_ia,src_exhaustive")
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[3], "1/3");
}

#[test]
fn verify_matrix_accepts_and_rejects() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(&dir, "good.json", QUOTED);
    let topo = fixture("six_user_repetition");
    let out = topodof(&["verify-matrix", topo.to_str().unwrap(), &good]);
    assert!(out.status.success());
    assert_eq!(json(&out)["ok"], true);

    // Everyone transmits in slot 1: user 1 hears user 4 on top of itself.
    let bad = write(&dir, "bad.json", r#"{"m":1,"n":1,"rows":["1","1","1","1","1","1"]}"#);
    let out = topodof(&["verify-matrix", topo.to_str().unwrap(), &bad]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["ok"], false);
    assert_eq!(v["receivers"][0]["failing_rows"], serde_json::json!([1]));
}

#[test]
fn invalid_inputs_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(&dir, "t.txt", "3\n100\n010\n");
    assert_eq!(topodof(&["bounds", &bad]).status.code(), Some(1));
    let missing = dir.path().join("none.txt");
    assert_eq!(topodof(&["bounds", missing.to_str().unwrap()]).status.code(), Some(1));
    let clash = write(&dir, "m.json", r#"{"m":2,"n":2,"rows":["11","01","10","01"]}"#);
    let topo = fixture("pentagon");
    assert_eq!(topodof(&["verify-matrix", topo.to_str().unwrap(), &clash]).status.code(), Some(1));
    assert_eq!(topodof(&["survey", "ring", "--radius", "2", "--samples", "3", "--seed", "1"]).status.code(), Some(1));
}

#[test]
fn simulate_summary() {
    let dir = tempfile::tempdir().unwrap();
    let tm = write(&dir, "tm.json", QUOTED);
    let topo = fixture("six_user_repetition");
    let out = topodof(&["simulate", topo.to_str().unwrap(), &tm, "--trials", "300", "--seed", "7"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["trials"], 300);
    assert_eq!(v["successes"], 300);
    assert_eq!(v["violations"], 0);
    assert!(v["max_residual"].as_f64().unwrap() < 1e-9);
    assert!(v["mean_log_norm"].as_f64().unwrap().is_finite());
    // Same seed, same output.
    let again = topodof(&["simulate", topo.to_str().unwrap(), &tm, "--trials", "300", "--seed", "7"]);
    assert_eq!(again.stdout, out.stdout);
}

#[test]
fn lemma_match_oracle_runs_clean() {
    let out = topodof(&["oracle", "lemma-match", "--trials", "300", "--seed", "3"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["trials"], 300);
    assert_eq!(v["disagreements"].as_array().unwrap().len(), 0);
    let total = v["agree_true"].as_u64().unwrap() + v["agree_false"].as_u64().unwrap();
    assert_eq!(total, 300);
}

#[test]
fn survey_writes_and_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let od = out_dir.to_str().unwrap();
    let first = topodof(&["survey", "six-cell", "--sample", "12", "--out", od, "--jobs", "2"]);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let agg = json(&first);
    assert_eq!(agg["count"], 12);

    // Without --resume the existing records are protected.
    assert_eq!(topodof(&["survey", "six-cell", "--sample", "12", "--out", od]).status.code(), Some(1));

    // Cut the last record in half; the resumed run redoes only that one.
    let log = out_dir.join("records.jsonl");
    let bytes = std::fs::read(&log).unwrap();
    std::fs::write(&log, &bytes[..bytes.len() - 10]).unwrap();
    let second = topodof(&["survey", "six-cell", "--sample", "12", "--out", od, "--resume"]);
    assert!(second.status.success());
    assert!(String::from_utf8_lossy(&second.stderr).contains("11 taken from checkpoint"));
    assert_eq!(json(&second), agg);

    let written: Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("aggregate.json")).unwrap()).unwrap();
    assert_eq!(written, agg);
    let csv = std::fs::read_to_string(out_dir.join("reports.csv")).unwrap();
    assert_eq!(csv.lines().count(), 13);
}

#[test]
fn ring_survey_small() {
    let out = topodof(&["survey", "ring", "--radius", "0.8", "--samples", "40", "--seed", "5"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["generated"], 40);
    assert_eq!(v["non_tight"], 0);
    let n = v["count"].as_u64().unwrap();
    assert!((1..=40).contains(&n));
    let mass: u64 = v["dsym"].as_object().unwrap().values().map(|x| x.as_u64().unwrap()).sum();
    assert_eq!(mass, n);
}
