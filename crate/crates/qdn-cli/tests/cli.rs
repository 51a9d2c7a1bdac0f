//! End-to-end checks of the compiled binary: exit codes, output formats,
//! oracle reports and emit/run consistency, driven against the fixture
//! corpus. The exit-code matrix is the CLI half of the interface criterion;
//! the format round-trip half lives in the engine crate's acceptance suite.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_qdn")
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn qdn(args: &[&str]) -> Output {
    Command::new(binary())
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

#[test]
fn run_prints_a_two_row_table() {
    let output = qdn(&["run", fixture("sg.qdn.json").to_str().unwrap()]);
    assert_eq!(code(&output), 0, "{}", stderr(&output));
    let text = stdout(&output);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "monomial,basis_index,amp_re,amp_im,probability"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("1,2,"));
    assert!(rows[1].starts_with("2,4,"));
}

#[test]
fn run_rejects_unnormalized_rules_with_exit_1() {
    let output = qdn(&["run", fixture("unnormalized.qdn.json").to_str().unwrap()]);
    assert_eq!(code(&output), 1);
    assert!(stderr(&output).contains("stage 0"), "{}", stderr(&output));
}

#[test]
fn run_rejects_malformed_documents_with_exit_2() {
    let output = qdn(&["run", fixture("malformed.qdn.json").to_str().unwrap()]);
    assert_eq!(code(&output), 2);
    assert!(stderr(&output).contains("line"), "{}", stderr(&output));
}

#[test]
fn run_names_the_out_of_range_field() {
    let output = qdn(&["run", fixture("out_of_range.qdn.json").to_str().unwrap()]);
    assert_eq!(code(&output), 2);
    assert!(
        stderr(&output).contains("stages[0].rules[0]"),
        "{}",
        stderr(&output)
    );
}

#[test]
fn run_rejects_missing_files_with_exit_2() {
    let output = qdn(&["run", "no-such-file.qdn.json"]);
    assert_eq!(code(&output), 2);
}

#[test]
fn run_emits_json_when_asked() {
    let output = qdn(&[
        "run",
        fixture("sg.qdn.json").to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(code(&output), 0);
    let value: serde_json::Value = serde_json::from_str(&stdout(&output)).unwrap();
    assert_eq!(value["register_rank"], 3);
    assert_eq!(value["rows"].as_array().unwrap().len(), 2);
    assert!((value["rows"][0]["probability"].as_f64().unwrap() - 0.36).abs() < 1e-12);
}

#[test]
fn run_writes_files_with_out() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("results.csv");
    let output = qdn(&[
        "run",
        fixture("sg.qdn.json").to_str().unwrap(),
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&output), 0);
    assert!(stdout(&output).is_empty());
    let written = std::fs::read(&path).unwrap();
    let direct = qdn(&["run", fixture("sg.qdn.json").to_str().unwrap()]);
    assert_eq!(written, direct.stdout);
}

#[test]
fn run_with_oracle_reports_deviation() {
    let output = qdn(&[
        "run",
        fixture("sg.qdn.json").to_str().unwrap(),
        "--oracle",
    ]);
    assert_eq!(code(&output), 0);
    assert!(
        stderr(&output).contains("oracle max deviation"),
        "{}",
        stderr(&output)
    );
}

#[test]
fn epr_document_passes_the_oracle_check() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("epr.qdn.json");
    let emit = qdn(&[
        "preset",
        "epr",
        "--theta",
        "1.1",
        "--phi",
        "0.4",
        "--emit",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&emit), 0, "{}", stderr(&emit));
    let output = qdn(&["run", path.to_str().unwrap(), "--oracle"]);
    assert_eq!(code(&output), 0, "{}", stderr(&output));
    let report = stderr(&output);
    let deviation: f64 = report
        .trim()
        .rsplit(' ')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!(deviation <= 1e-12, "{report}");
}

#[test]
fn validate_passes_and_fails_by_contract() {
    let good = qdn(&["validate", fixture("sg.qdn.json").to_str().unwrap()]);
    assert_eq!(code(&good), 0);
    assert!(stdout(&good).contains("passed"));

    let bad = qdn(&["validate", fixture("unnormalized.qdn.json").to_str().unwrap()]);
    assert_eq!(code(&bad), 1);
    assert!(stderr(&bad).contains("stage 0"), "{}", stderr(&bad));
    assert!(stderr(&bad).contains("Gram deviation"), "{}", stderr(&bad));
}

#[test]
fn oracle_command_checks_documents() {
    let output = qdn(&["oracle", fixture("sg.qdn.json").to_str().unwrap()]);
    assert_eq!(code(&output), 0, "{}", stderr(&output));
    assert!(stdout(&output).contains("oracle max deviation"));
}

#[test]
fn oracle_random_is_seed_reproducible() {
    let args = [
        "oracle", "--random", "--count", "5", "--stages", "3", "--max-rank", "4", "--seed", "7",
    ];
    let first = qdn(&args);
    let second = qdn(&args);
    assert_eq!(code(&first), 0, "{}", stderr(&first));
    assert_eq!(first.stdout, second.stdout);
    let third = qdn(&[
        "oracle", "--random", "--count", "5", "--stages", "3", "--max-rank", "4", "--seed", "8",
    ]);
    assert_ne!(first.stdout, third.stdout);
}

#[test]
fn preset_sg_runs_pure_channel() {
    let output = qdn(&["preset", "sg", "--alpha", "1,0", "--beta", "0,0"]);
    assert_eq!(code(&output), 0, "{}", stderr(&output));
    let text = stdout(&output);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].starts_with("1,2,1,0,1"));
}

#[test]
fn preset_epr_reports_quarter_coincidences() {
    let output = qdn(&["preset", "epr", "--theta", "1.5707963", "--phi", "0"]);
    assert_eq!(code(&output), 0, "{}", stderr(&output));
    let text = stdout(&output);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    for row in rows {
        let probability: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
        assert!((probability - 0.25).abs() < 1e-6, "{row}");
    }
}

#[test]
fn preset_emit_then_run_matches_direct_run() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("double-slit.qdn.json");
    let emit = qdn(&[
        "preset",
        "double-slit",
        "--sites",
        "8",
        "--slits",
        "1,7",
        "--emit",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&emit), 0, "{}", stderr(&emit));
    let from_file = qdn(&["run", path.to_str().unwrap()]);
    let direct = qdn(&["preset", "double-slit", "--sites", "8", "--slits", "1,7"]);
    assert_eq!(code(&from_file), 0, "{}", stderr(&from_file));
    assert_eq!(from_file.stdout, direct.stdout);
}

#[test]
fn preset_rejects_missing_parameters_with_usage() {
    let output = qdn(&["preset", "sg", "--alpha", "1,0"]);
    assert_eq!(code(&output), 2);
    assert!(stderr(&output).contains("requires --beta"), "{}", stderr(&output));
    assert!(stderr(&output).contains("presets and their parameters"));
}

#[test]
fn preset_rejects_unknown_names() {
    let output = qdn(&["preset", "bell"]);
    assert_eq!(code(&output), 2);
}

#[test]
fn preset_rejects_unnormalized_amplitudes() {
    let output = qdn(&["preset", "sg", "--alpha", "1,0", "--beta", "1,0"]);
    assert_eq!(code(&output), 2);
    assert!(stderr(&output).contains("unit total probability"), "{}", stderr(&output));
}

#[test]
fn usage_errors_exit_2() {
    let output = qdn(&["frobnicate"]);
    assert_eq!(code(&output), 2);
    let output = qdn(&[]);
    assert_eq!(code(&output), 2);
}

#[test]
fn acceptance_cli_exit_codes() {
    // the criterion's CLI half: exit codes over the whole fixture corpus
    let table: Vec<(Vec<&str>, i32)> = vec![
        (vec!["run", "sg"], 0),
        (vec!["run", "unnormalized"], 1),
        (vec!["run", "malformed"], 2),
        (vec!["run", "out_of_range"], 2),
        (vec!["validate", "sg"], 0),
        (vec!["validate", "unnormalized"], 1),
        (vec!["oracle", "sg"], 0),
    ];
    let mut pass = true;
    for (args, expected) in table {
        let path = fixture(&format!("{}.qdn.json", args[1]));
        let output = qdn(&[args[0], path.to_str().unwrap()]);
        pass &= code(&output) == expected;
    }
    let missing_param = qdn(&["preset", "epr"]);
    pass &= code(&missing_param) == 2;
    let ok_preset = qdn(&["preset", "hsz", "--theta", "0.3", "--beamsplitter", "--oracle"]);
    pass &= code(&ok_preset) == 0;
    println!(
        "criterion 11-cli (CLI exit codes): {}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass);
}
