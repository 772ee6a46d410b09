//! The `evalnet` binary end to end.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_evalnet"))
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn validate_reports_every_problem() {
    let tmp = tempfile::tempdir().unwrap();
    let ok = run(tmp.path(), &["validate", configs().join("line.toml").to_str().unwrap()]);
    assert!(ok.status.success());
    assert!(stdout(&ok).starts_with("valid: line topology"));

    let bad = tmp.path().join("bad.toml");
    let text = std::fs::read_to_string(configs().join("line.toml"))
        .unwrap()
        .replace("q_total = 10", "q_total = 0")
        .replace(
            "{ from = \"I3\", to = \"I4\" }",
            "{ from = \"I3\", to = \"I4\" }, { from = \"I4\", to = \"E\" }",
        );
    std::fs::write(&bad, text).unwrap();
    let o = run(tmp.path(), &["validate", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("q_total") && err.contains("network"), "{err}");
}

#[test]
fn simulate_prints_cells_per_stream() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(tmp.path(), &["simulate", configs().join("line.toml").to_str().unwrap()]);
    assert!(o.status.success());
    let out = stdout(&o);
    for line in ["E->I1", "I1->I2", "I2->I3"] {
        let row = out.lines().find(|l| l.starts_with(line)).unwrap();
        assert!(row.contains(" 3/3 "), "{row}");
    }
    assert!(out.lines().any(|l| l.starts_with("I3->I4") && l.contains(" 5/5 ")));
    assert!(!tmp.path().join("runs").exists());
}

#[test]
fn run_resume_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("star.toml");
    let cfg = cfg.to_str().unwrap();
    let o = run(tmp.path(), &["run", cfg, "--run-id", "a", "--max-rounds", "12"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("interrupted"));
    let rounds = tmp.path().join("runs/a/rounds");
    let before: Vec<(PathBuf, Vec<u8>)> = std::fs::read_dir(&rounds)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            let b = std::fs::read(&p).unwrap();
            (p, b)
        })
        .collect();
    let o = run(tmp.path(), &["resume", "a"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for (p, b) in before {
        assert_eq!(&std::fs::read(&p).unwrap()[..b.len()], &b[..]);
    }
    let o = run(tmp.path(), &["--json", "report", "a", "--csv", "out"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["run_id"], "a");
    assert!(tmp.path().join("out/summary.csv").is_file());

    let o = run(tmp.path(), &["report", "missing"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("run not found"));

    let other = configs().join("line.toml");
    let o = run(tmp.path(), &["resume", "a", "--config", other.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("config conflict"));
}

#[test]
fn failed_streams_get_one_error_line_each() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("code.toml");
    std::fs::write(
        &cfg,
        r#"
[engine]
q_total = 2

[backends.m]
kind = "scripted"

[network]
topology = "star"
nodes = [
  { node_id = "E", model_ref = "m", role = "interviewee" },
  { node_id = "C1", model_ref = "m", role = "interviewer", task_binding = "CodeGen" },
  { node_id = "C2", model_ref = "m", role = "interviewer", task_binding = "CodeDebug" },
  { node_id = "B", model_ref = "m", role = "interviewer", task_binding = "BTT" },
]
routes = [{ from = "E", to = "C1" }, { from = "E", to = "C2" }, { from = "E", to = "B" }]
"#,
    )
    .unwrap();
    let o = run(tmp.path(), &["simulate", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    let lines: Vec<&str> = err.lines().filter(|l| l.starts_with("error: stream")).collect();
    assert_eq!(lines.len(), 2, "{err}");
    assert!(lines.iter().all(|l| l.contains("no code runner")));
}
