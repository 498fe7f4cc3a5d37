use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn impulsekit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_impulsekit")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = impulsekit(args);
    assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn simulate(dir: &Path, n: &str) -> std::path::PathBuf {
    let out = dir.join("sim");
    ok(&["simulate", "--n", n, "--seed", "11", "-o", p(&out)]);
    out.join("sessions.jsonl")
}

fn column(csv_text: &str, name: &str) -> Vec<String> {
    let mut r = csv::Reader::from_reader(csv_text.as_bytes());
    let idx = r.headers().unwrap().iter().position(|h| h == name).unwrap();
    r.records().map(|rec| rec.unwrap()[idx].to_string()).collect()
}

#[test]
fn commission_conventions_are_complementary() {
    let dir = tempfile::tempdir().unwrap();
    let sessions = simulate(dir.path(), "4");
    let (f5, f6) = (dir.path().join("inhibition.csv"), dir.path().join("response.csv"));
    ok(&["metrics", p(&sessions), "-o", p(&f5), "--commission", "inhibition-rate"]);
    ok(&["metrics", p(&sessions), "-o", p(&f6), "--commission", "response-rate"]);
    let a = column(&std::fs::read_to_string(&f5).unwrap(), "commission_error");
    let b = column(&std::fs::read_to_string(&f6).unwrap(), "commission_error");
    // one whole-session row and one neutral-block row per subject
    assert_eq!(a.len(), 8);
    for (x, y) in a.iter().zip(&b) {
        let sum: f64 = x.parse::<f64>().unwrap() + y.parse::<f64>().unwrap();
        assert!((sum - 1.0).abs() < 1e-12);
    }
    let text = std::fs::read_to_string(&f5).unwrap();
    assert!(column(&text, "commission_convention").iter().all(|c| c == "inhibition_rate"));
}

#[test]
fn contrast_report_on_61_subjects() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("scores.csv");
    let mut csv = String::from("subject_id,condition,score\n");
    for s in 0..61 {
        for (j, c) in ["unpleasant", "neutral", "pleasant"].iter().enumerate() {
            let v = ((s * 37 + j * 11) % 17) as f64 / 7.0 + s as f64 * 0.1;
            csv.push_str(&format!("s{s:02},{c},{v}\n"));
        }
    }
    std::fs::write(&table, csv).unwrap();
    let out = ok(&["contrast", p(&table), "--measure", "score", "--weights", "2,-1,-1"]);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let c = &report["results"]["contrast"]["contrast"];
    assert_eq!(c["df"], 120.0);
    assert_eq!(c["alt_subject_scores"]["df"], 60.0);
    assert_eq!(report["options"]["weights"], serde_json::json!([2.0, -1.0, -1.0]));

    let bad = impulsekit(&["contrast", p(&table), "--measure", "score", "--weights", "1,1,1"]);
    assert_eq!(bad.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&bad.stderr).unwrap();
    assert_eq!(err["error"], "usage");
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let sessions = simulate(dir.path(), "2");
    ok(&["validate", p(&sessions)]);

    let text = std::fs::read_to_string(&sessions).unwrap();
    let mut v: Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    v["trials"][3]["samples"][2][0] = v["trials"][3]["samples"][1][0].clone();
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, v.to_string()).unwrap();
    let out = impulsekit(&["validate", p(&broken), "--json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("monotonicity"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(impulsekit(&["metrics"]).status.code(), Some(2));
    assert_eq!(impulsekit(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(impulsekit(&["metrics", "x.json", "-o", "y.csv", "--quantile", "median"]).status.code(), Some(2));
}

#[test]
fn failed_runs_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.jsonl");
    let out_csv = dir.path().join("features.csv");
    let out = impulsekit(&["features", p(&missing), "-o", p(&out_csv)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(serde_json::from_slice::<Value>(&out.stderr).is_ok());
    assert!(!out_csv.exists());
}

#[test]
fn features_and_fits_tables() {
    let dir = tempfile::tempdir().unwrap();
    let sessions = simulate(dir.path(), "2");
    let f = dir.path().join("f.csv");
    ok(&["features", p(&sessions), "-o", p(&f)]);
    let text = std::fs::read_to_string(&f).unwrap();
    // two subjects × (200 stop-signal + 90 discounting) trials
    assert_eq!(column(&text, "subject_id").len(), 2 * 290);
    let fits = dir.path().join("fits.csv");
    ok(&["fit-dd", p(&sessions), "-o", p(&fits), "--variant", "literal"]);
    let text = std::fs::read_to_string(&fits).unwrap();
    assert!(column(&text, "model_variant").iter().all(|v| v == "literal_exponent"));
}

#[test]
fn pipeline_report_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = concat!(env!("CARGO_MANIFEST_DIR"), "/demo/pipeline.json");
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    ok(&["pipeline", "--config", config, "-o", p(&a)]);
    ok(&["pipeline", "--config", config, "-o", p(&b)]);
    let (ra, rb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ra, rb);
    let report: Value = serde_json::from_slice(&ra).unwrap();
    let cfg = &report["options"]["config"];
    assert_eq!(cfg["metrics"]["ssrt"]["omission"], "exclude");
    assert_eq!(cfg["metrics"]["ssrt"]["quantile"], "nth");
    assert_eq!(cfg["metrics"]["commission"], "response_rate");
    assert_eq!(cfg["metrics"]["variant"], "softmax_hyperbolic");
    assert_eq!(cfg["moderation"]["center"], true);
    assert_eq!(cfg["source"]["spec"]["seed"], 20240101);
}
