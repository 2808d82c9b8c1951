//! End-to-end tests of the `qutel` binary: flag surface, config file,
//! output schema, determinism, and exit codes.

use std::path::PathBuf;
use std::process::{Command, Output};
use std::sync::atomic::{AtomicU32, Ordering};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qutel"))
}

static DIR_COUNTER: AtomicU32 = AtomicU32::new(0);

fn scratch_dir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!(
        "qutel-cli-test-{}-{}",
        std::process::id(),
        DIR_COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

#[test]
fn verify_passes_on_reference_channel() {
    let output = run(&[
        "--mode",
        "verify",
        "--dim",
        "3",
        "--schmidt",
        "0.408,0.577,0.707",
        "--trials",
        "400",
    ]);
    assert!(output.status.success(), "{}", stderr(&output));
    let text = stdout(&output);
    assert!(
        text.contains("analytic success probability: 0.49977"),
        "{text}"
    );
    assert!(text.contains("PASS success_probability_law"));
    assert!(!text.contains("FAIL"));
    assert!(stderr(&output).contains("normalized"));
}

#[test]
fn verify_normalizes_maximal_list_with_warning() {
    let output = run(&[
        "--mode",
        "verify",
        "--dim",
        "3",
        "--schmidt",
        "1,1,1",
        "--trials",
        "200",
    ]);
    assert!(output.status.success(), "{}", stderr(&output));
    assert!(stdout(&output).contains("analytic success probability: 1"));
    assert!(stderr(&output).contains("normalized"));
}

#[test]
fn degenerate_sorted_channel_runs_with_zero_probability() {
    // 1,0,0 sorts to (0,0,1): a valid separable channel that never delivers.
    let output = run(&[
        "--mode",
        "montecarlo",
        "--schmidt",
        "1,0,0",
        "--trials",
        "20",
        "--max-attempts",
        "3",
        "--seed",
        "5",
    ]);
    assert!(output.status.success(), "{}", stderr(&output));
    assert!(stderr(&output).contains("sorted"));
    let text = stdout(&output);
    let row = text.lines().nth(1).unwrap();
    let fields: Vec<&str> = row.split(',').collect();
    assert_eq!(fields[2].parse::<f64>().unwrap(), 0.0, "analytic p: {row}");
    assert_eq!(fields[3].parse::<f64>().unwrap(), 0.0, "empirical p: {row}");
    let recovery: f64 = fields[7].parse().unwrap();
    assert!(recovery > 1.0 - 1e-10, "recovery fidelity: {row}");
}

#[test]
fn rejects_bad_configurations() {
    let output = run(&["--mode", "verify", "--schmidt", "-0.3,0.7"]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr(&output).contains("negative"), "{}", stderr(&output));

    let output = run(&["--mode", "verify", "--dim", "1", "--schmidt", "maximal"]);
    assert_eq!(output.status.code(), Some(2));

    let output = run(&["--mode", "verify", "--schmidt", "0.4,oops,0.7"]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr(&output).contains("entry 2"), "{}", stderr(&output));

    let output = run(&["--mode", "sweep", "--dim", "3", "--schmidt", "maximal"]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr(&output).contains("sweep"), "{}", stderr(&output));
}

#[test]
fn montecarlo_output_is_byte_identical_across_runs() {
    let dir = scratch_dir();
    let first = dir.join("a.csv");
    let second = dir.join("b.csv");
    for path in [&first, &second] {
        let output = run(&[
            "--mode",
            "montecarlo",
            "--dim",
            "3",
            "--schmidt",
            "b0sq=0.1",
            "--trials",
            "400",
            "--seed",
            "11",
            "--output",
            path.to_str().unwrap(),
        ]);
        assert!(output.status.success(), "{}", stderr(&output));
    }
    let a = std::fs::read(&first).unwrap();
    let b = std::fs::read(&second).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b, "same config + seed must produce identical bytes");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn montecarlo_row_matches_analytic_probability() {
    let output = run(&[
        "--mode",
        "montecarlo",
        "--dim",
        "3",
        "--schmidt",
        "0.408,0.577,0.707",
        "--trials",
        "3000",
        "--seed",
        "21",
    ]);
    assert!(output.status.success(), "{}", stderr(&output));
    let text = stdout(&output);
    let row = text.lines().nth(1).unwrap();
    let fields: Vec<&str> = row.split(',').collect();
    let analytic: f64 = fields[2].parse().unwrap();
    let empirical: f64 = fields[3].parse().unwrap();
    let mean_attempts: f64 = fields[5].parse().unwrap();
    assert!((analytic - 0.5).abs() < 0.01);
    assert!((empirical - 0.5).abs() < 0.05, "{row}");
    assert!((mean_attempts - 2.0).abs() < 0.2, "{row}");
    let min_fid: f64 = fields[6].parse().unwrap();
    assert!(min_fid > 1.0 - 1e-10);
}

#[test]
fn sweep_analytic_column_is_monotone_and_ends_at_one() {
    let output = run(&[
        "--mode",
        "sweep",
        "--dim",
        "4",
        "--schmidt",
        "maximal",
        "--sweep",
        "b0sq=0:0.05:0.25",
        "--trials",
        "100",
        "--seed",
        "2",
    ]);
    assert!(output.status.success(), "{}", stderr(&output));
    let text = stdout(&output);
    let mut analytic = Vec::new();
    for line in text.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 9, "row arity: {line}");
        analytic.push(fields[2].parse::<f64>().unwrap());
    }
    assert_eq!(analytic.len(), 6);
    for pair in analytic.windows(2) {
        assert!(
            pair[0] <= pair[1] + 1e-12,
            "column not monotone: {analytic:?}"
        );
    }
    assert!((analytic[5] - 1.0).abs() < 1e-12);
}

#[test]
fn jsonl_format_and_transcript_dump() {
    let dir = scratch_dir();
    let rows = dir.join("rows.jsonl");
    let transcripts = dir.join("transcripts.jsonl");
    let output = run(&[
        "--mode",
        "montecarlo",
        "--dim",
        "2",
        "--schmidt",
        "b0sq=0.3",
        "--trials",
        "8",
        "--seed",
        "13",
        "--format",
        "jsonl",
        "--output",
        rows.to_str().unwrap(),
        "--dump-transcripts",
        transcripts.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", stderr(&output));
    let rows_text = std::fs::read_to_string(&rows).unwrap();
    assert_eq!(rows_text.lines().count(), 1);
    let row: serde_json::Value = serde_json::from_str(rows_text.lines().next().unwrap()).unwrap();
    assert_eq!(row["dim"], 2);
    assert_eq!(row["trials"], 8);
    let transcripts_text = std::fs::read_to_string(&transcripts).unwrap();
    assert_eq!(transcripts_text.lines().count(), 8);
    for line in transcripts_text.lines() {
        let value: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(value["flag"]["p_success"].is_number());
        assert!(value["branch"].is_object());
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn config_file_drives_a_run_and_flags_override() {
    let dir = scratch_dir();
    let conf = dir.join("run.conf");
    let out_a = dir.join("a.csv");
    let out_b = dir.join("b.csv");
    std::fs::write(
        &conf,
        format!(
            "# reference channel\nmode = montecarlo\ndim = 3\nschmidt = b0sq=0.1\n\
             seed = 4\ntrials = 50\noutput = {}\n",
            out_a.display()
        ),
    )
    .unwrap();
    let output = run(&["--config", conf.to_str().unwrap()]);
    assert!(output.status.success(), "{}", stderr(&output));
    assert!(out_a.exists());

    let output = run(&[
        "--config",
        conf.to_str().unwrap(),
        "--output",
        out_b.to_str().unwrap(),
        "--trials",
        "10",
    ]);
    assert!(output.status.success(), "{}", stderr(&output));
    let text = std::fs::read_to_string(&out_b).unwrap();
    assert!(text.lines().nth(1).unwrap().contains(",10,"), "{text}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn output_dir_environment_variable_anchors_relative_paths() {
    let dir = scratch_dir();
    let output = bin()
        .args([
            "--mode",
            "montecarlo",
            "--dim",
            "2",
            "--schmidt",
            "maximal",
            "--trials",
            "5",
            "--output",
            "nested/result.csv",
        ])
        .env("QUTEL_OUTPUT_DIR", &dir)
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", stderr(&output));
    assert!(dir.join("nested/result.csv").exists());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn timing_flag_populates_the_last_column() {
    let output = run(&[
        "--mode",
        "montecarlo",
        "--dim",
        "2",
        "--schmidt",
        "maximal",
        "--trials",
        "5",
        "--timing",
    ]);
    assert!(output.status.success(), "{}", stderr(&output));
    let text = stdout(&output);
    let row = text.lines().nth(1).unwrap();
    let last = row.split(',').next_back().unwrap();
    assert!(last.parse::<u64>().is_ok(), "wall_time_ms missing: {row}");
}
