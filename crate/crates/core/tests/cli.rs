//! End-to-end checks of the command-line surface: subcommands, exit codes,
//! and file outputs.

use std::path::PathBuf;
use std::process::{Command, Output};

fn trimaj(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trimaj"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("trimaj-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn version_prints_and_exits_zero() {
    let out = trimaj(&["version"]);
    assert!(out.status.success());
    assert!(stdout(&out).starts_with("trimaj "));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let out = trimaj(&["bogus"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_spec_file_is_an_io_error() {
    let out = trimaj(&["sweep", "--spec", "/nonexistent/path.toml"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn simulate_reports_each_trial_and_writes_a_trace() {
    let dir = temp_dir("simulate");
    let trace = dir.join("trace.jsonl");
    let out = trimaj(&[
        "simulate",
        "--n",
        "2000",
        "--k",
        "2",
        "--trials",
        "2",
        "--seed",
        "5",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("trial 0:"));
    assert!(text.contains("trial 1:"));
    assert!(text.contains("terminal=strict-consensus"));

    let lines = std::fs::read_to_string(&trace).unwrap();
    for line in lines.lines() {
        let record: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(record["round"].is_u64());
        let cfg = record["post_adv"].as_str().unwrap();
        assert!(cfg.starts_with("n=2000;"));
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn sweep_then_fit_round_trip() {
    let dir = temp_dir("sweep");
    let csv = dir.join("rows.csv");
    let summary = dir.join("summary.json");
    let spec = dir.join("spec.toml");
    std::fs::write(
        &spec,
        format!(
            r#"
seed = 11
trials = 20

[grid]
n = [1000, 4000, 16000]
k = [3]

[outputs]
csv = "{}"
summary = "{}"
"#,
            csv.display(),
            summary.display()
        ),
    )
    .unwrap();

    let out = trimaj(&["sweep", "--spec", spec.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("rows written"));

    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(json["cells"].as_array().unwrap().len(), 3);
    assert_eq!(json["trials"], 20);

    let fit = trimaj(&[
        "fit",
        "--input",
        csv.to_str().unwrap(),
        "--x",
        "n",
        "--y",
        "rounds",
    ]);
    assert!(fit.status.success());
    assert!(stdout(&fit).contains("slope"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn oracle_check_passes() {
    let out = trimaj(&["oracle-check", "--fuzz", "300"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("all checks passed"));
}

#[test]
fn drift_walk_reports_bound_and_samples() {
    let dir = temp_dir("walk");
    let csv = dir.join("samples.csv");
    let out = trimaj(&[
        "drift",
        "walk",
        "--trials",
        "500",
        "--seed",
        "3",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("exact E[tau]"));
    assert!(text.contains("satisfied"));
    let lines = std::fs::read_to_string(&csv).unwrap();
    assert!(lines.starts_with("trial,tau,y_at_tau,exit_reason"));
    assert_eq!(lines.lines().count(), 501);
    std::fs::remove_dir_all(&dir).ok();
}
