use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const CANONICAL: &str = r#"{"sectors": [{"dim": 2}, {"dim": 1}],
 "q": [[0.5, 0.3], [0.3, -0.4]],
 "rotation_blocks": [{"sector": 0, "coords": [0, 1], "lambda": 2.0}],
 "truncation": 4}
"#;

fn mqaw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mqaw"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn validate_accepts_and_rejects() {
    let dir = TempDir::new().unwrap();
    let good = write(dir.path(), "good.json", CANONICAL);
    let out = mqaw(&["validate", good.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));

    let bad = write(dir.path(), "bad.json", &CANONICAL.replace("0.5", "1.5"));
    let out = mqaw(&["validate", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("|q[0][0]| = 1.5"), "{}", stderr(&out));
}

#[test]
fn parse_errors_report_their_location() {
    let dir = TempDir::new().unwrap();
    let path = write(dir.path(), "broken.json", "{\"sectors\": [{\"dim\": 2}],\n \"q\": [[0.2]],, }");
    let out = mqaw(&["check", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 2, column 15"), "{}", stderr(&out));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(mqaw(&["check"]).status.code(), Some(2));
    assert_eq!(mqaw(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(mqaw(&["check", "/nonexistent/spec.json"]).status.code(), Some(2));
}

#[test]
fn check_writes_identical_reports() {
    let dir = TempDir::new().unwrap();
    let spec = write(dir.path(), "spec.json", CANONICAL);
    let mut reports = Vec::new();
    for run in ["a", "b"] {
        let out_dir = dir.path().join(run);
        let out = mqaw(&[
            "check",
            spec.to_str().unwrap(),
            "--seed",
            "11",
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        assert!(out_dir.join("timings.json").exists());
        reports.push(std::fs::read(out_dir.join("report.json")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    let report: serde_json::Value = serde_json::from_slice(&reports[0]).unwrap();
    assert_eq!(report["pass"], true);
    assert_eq!(report["suites"].as_array().unwrap().len(), 8);
}

#[test]
fn corrupted_twist_fails_with_one() {
    let dir = TempDir::new().unwrap();
    let config = format!(
        r#"{{"model": {}, "suites": ["yang_baxter", "positivity"]}}"#,
        CANONICAL.replace("\"truncation\": 4", "\"truncation\": 3")
    );
    let path = write(dir.path(), "run.json", &config);
    let out = mqaw(&["check", path.to_str().unwrap(), "--corrupt-twist"]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
    assert!(stderr(&out).contains("yang_baxter    FAIL"));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["pass"], false);
}

#[test]
fn moments_and_scan_emit_csv() {
    let dir = TempDir::new().unwrap();
    let spec = write(dir.path(), "spec.json", CANONICAL);
    let out = mqaw(&["moments", spec.to_str().unwrap(), "--max-order", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 + 9 + 27 + 81);

    let out = mqaw(&["scan", spec.to_str().unwrap(), "--q", "-0.5,0,0.5", "--level", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert_eq!(csv.lines().next(), Some("q,level,min_eigenvalue"));
    assert_eq!(csv.lines().count(), 1 + 9);

    let out = mqaw(&["moments", spec.to_str().unwrap(), "--max-order", "9"]);
    assert_eq!(out.status.code(), Some(2));
}
