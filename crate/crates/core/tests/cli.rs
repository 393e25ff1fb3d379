//! End-to-end tests of the rumorsim binary: exit codes, replay determinism,
//! config-file precedence and output shapes.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rumorsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rumorsim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(output: &Output) -> serde_json::Value {
    assert!(output.status.success(), "stderr: {}", String::from_utf8_lossy(&output.stderr));
    serde_json::from_slice(&output.stdout).expect("stdout is JSON")
}

#[test]
fn missing_required_flag_names_the_field_and_exits_2() {
    let out = rumorsim(&["simulate", "--protocol", "pull", "--n", "64"]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("'a'"), "stderr was: {stderr}");
}

#[test]
fn unknown_protocol_exits_2() {
    let out = rumorsim(&["predict", "--protocol", "shout", "--n", "100", "--a", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_replay_is_byte_identical_across_workers() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let run = |out: &Path, workers: &str| {
        let out_str = out.to_str().unwrap();
        let result = rumorsim(&[
            "simulate", "--protocol", "pull", "--n", "128", "--a", "1.0", "--trials", "200",
            "--seed", "42", "--workers", workers, "--out", out_str,
        ]);
        assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    };
    run(&out_a, "1");
    run(&out_b, "3");
    let trials_a = fs::read(out_a.join("trials.jsonl")).unwrap();
    let trials_b = fs::read(out_b.join("trials.jsonl")).unwrap();
    assert_eq!(trials_a.len(), trials_b.len());
    assert_eq!(trials_a, trials_b);
    assert_eq!(trials_a.iter().filter(|&&b| b == b'\n').count(), 200);

    // Summary embeds the resolved config and seed for replay.
    let summary: serde_json::Value =
        serde_json::from_slice(&fs::read(out_a.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["master_seed"], 42);
    assert_eq!(summary["n"], 128);
    assert_eq!(summary["protocol"], "pull");
}

#[test]
fn simulate_rle_counts_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rle");
    let result = rumorsim(&[
        "simulate", "--protocol", "push", "--n", "32", "--a", "0.8", "--trials", "20",
        "--seed", "7", "--rle", "--out", out.to_str().unwrap(),
    ]);
    assert!(result.status.success());
    let text = fs::read_to_string(out.join("trials.jsonl")).unwrap();
    for line in text.lines() {
        let record: rumorsim::protocols::TraceRecord = serde_json::from_str(line).unwrap();
        let trace = record.into_trace().expect("valid trace invariants");
        assert_eq!(*trace.counts.last().unwrap(), 32);
    }
}

#[test]
fn predict_echoes_growth_rate() {
    let out = rumorsim(&[
        "predict", "--protocol", "pushpull", "--n", "1000000", "--a", "0.693147",
    ]);
    let json = stdout_json(&out);
    let gamma = json["growth_rate"].as_f64().unwrap();
    assert!((gamma - 0.639326).abs() < 1e-5, "gamma = {gamma}");
    assert!(json["total_leading"].as_f64().unwrap() > 0.0);
}

#[test]
fn oracle_two_node_expected_time() {
    let out = rumorsim(&["oracle", "--n", "2", "--a", "1", "--protocol", "push"]);
    let json = stdout_json(&out);
    let t = json["expected_time"].as_f64().unwrap();
    assert!((t - 2.0).abs() < 1e-9, "E[T] = {t}");
}

#[test]
fn oracle_above_cap_exits_2() {
    let out = rumorsim(&["oracle", "--n", "7", "--a", "1", "--protocol", "push"]);
    assert_eq!(out.status.code(), Some(2));
    let out = rumorsim(&[
        "oracle", "--n", "7", "--a", "1", "--protocol", "push", "--max-oracle-n", "7",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn estimate_pk_reports_envelope() {
    let out = rumorsim(&[
        "estimate", "--stat", "pk", "--protocol", "pull", "--n", "50", "--a", "1.0",
        "--k", "5", "--samples", "2000", "--seed", "9",
    ]);
    let json = stdout_json(&out);
    assert_eq!(json["stat"], "pk");
    assert_eq!(json["k"], 5);
    let point = json["result"]["point"].as_f64().unwrap();
    assert!(point > 0.0 && point < 1.0);
}

#[test]
fn estimate_conditional_rejects_wrong_protocol_and_low_events() {
    let out = rumorsim(&[
        "estimate", "--stat", "pull-given-push", "--protocol", "push", "--n", "100",
        "--a", "1.0", "--k", "5", "--samples", "100",
    ]);
    assert_eq!(out.status.code(), Some(2));

    let out = rumorsim(&[
        "estimate", "--stat", "pull-given-push", "--n", "100", "--a", "0.2", "--k", "1",
        "--samples", "120",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("conditioning events"));
}

#[test]
fn estimate_time_csv_is_plot_ready() {
    let out = rumorsim(&[
        "estimate", "--stat", "time", "--protocol", "pull", "--n", "32", "--a", "1.0",
        "--trials", "300", "--seed", "3", "--format", "csv",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("r,upper_freq,lower_freq\n"), "got: {text}");
}

#[test]
fn round_limit_exits_3() {
    let out = rumorsim(&[
        "simulate", "--protocol", "pull", "--n", "64", "--a", "0.001", "--trials", "10",
        "--max-rounds", "5",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("5 rounds"));
}

#[test]
fn config_file_fills_gaps_but_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.conf");
    fs::write(&cfg, "protocol = pull\nn = 64\na = 1.0\ntrials = 50\nseed = 5\n").unwrap();
    let out = rumorsim(&["simulate", "--config", cfg.to_str().unwrap(), "--n", "16"]);
    let json = stdout_json(&out);
    assert_eq!(json["n"], 16, "flag must beat config file");
    assert_eq!(json["protocol"], "pull");
    assert_eq!(json["trials"], 50);
    assert_eq!(json["master_seed"], 5);
}

#[test]
fn malformed_config_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    fs::write(&cfg, "this is not key value\n").unwrap();
    let out = rumorsim(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

/// The verify contract: exit code 0 exactly when every printed criterion
/// line says PASS, 1 otherwise, with the failures listed.
#[test]
fn verify_quick_exit_code_matches_reported_lines() {
    let dir = tempfile::tempdir().unwrap();
    let summary_path = dir.path().join("verify.json");
    let out = rumorsim(&[
        "verify", "--quick", "--seed", "20260809", "--out", summary_path.to_str().unwrap(),
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    let pass_lines = text.lines().filter(|l| l.starts_with("[PASS]")).count();
    let fail_lines = text.lines().filter(|l| l.starts_with("[FAIL]")).count();
    assert_eq!(pass_lines + fail_lines, 11, "one line per criterion:\n{text}");
    if fail_lines == 0 {
        assert_eq!(out.status.code(), Some(0));
        assert!(text.contains("all 11 criteria passed"));
    } else {
        assert_eq!(out.status.code(), Some(1));
        assert!(text.contains("FAILED criteria:"));
    }
    let summary: serde_json::Value =
        serde_json::from_slice(&fs::read(&summary_path).unwrap()).unwrap();
    assert_eq!(summary["all_passed"].as_bool().unwrap(), fail_lines == 0);
    assert_eq!(summary["config"]["quick"], true);
}
