use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Stdio};

use btweave::cli::{run_with, EXIT_FINDINGS, EXIT_OK, EXIT_USAGE};

fn manifest(parts: &[&str]) -> String {
    let mut p = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    p.extend(parts);
    p.display().to_string()
}

fn demo() -> String {
    manifest(&["examples", "demo_axis.btw"])
}

fn answers() -> String {
    manifest(&["examples", "answers.txt"])
}

/// Runs the CLI in-process: (exit code, stdout, stderr).
fn cli(args: &[&str]) -> (i32, String, String) {
    let argv: Vec<String> = std::iter::once("btweave").chain(args.iter().copied()).map(String::from).collect();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn temp_file(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("btweave-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn validate_accepts_the_demo() {
    let (code, out, err) = cli(&["validate", &demo()]);
    assert_eq!(code, EXIT_OK, "{out}{err}");
}

#[test]
fn validate_rejects_broken_files() {
    let bad = temp_file("bad.btw", "tree t {\n  sequence {\n");
    let (code, _, err) = cli(&["validate", bad.to_str().unwrap()]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("3:1") || err.contains("2:"), "{err}");
    let (code, _, _) = cli(&["validate", "/nonexistent/file.btw"]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn validate_reports_a_control_cycle() {
    let text = std::fs::read_to_string(demo())
        .unwrap()
        .replace("tree hmi_main {\n  skill get_axis_position\n}", "tree hmi_main {\n  remote BASE.base_main\n}");
    let p = temp_file("cycle.btw", &text);
    let (code, out, err) = cli(&["validate", p.to_str().unwrap()]);
    assert_eq!(code, EXIT_FINDINGS, "{out}{err}");
    assert!(format!("{out}{err}").contains("cycle"), "{out}{err}");
}

#[test]
fn check_protocol_builtin_and_mutants() {
    let (code, out, _) = cli(&["check-protocol"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("consistent (13 states, 17 transitions)"), "{out}");
    let (code, out, _) = cli(&["check-protocol", &manifest(&["protocols", "mutant_double_tick.roles"])]);
    assert_eq!(code, EXIT_FINDINGS);
    assert!(out.contains("inconsistent"), "{out}");
    assert!(out.contains("witness:"), "{out}");
}

#[test]
fn plan_reports_unrefined_goals() {
    let (code, out, err) = cli(&["plan", &demo(), "--goal", "power == true"]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.contains("achieved by power_on_axis"), "{out}");
    assert!(out.contains("tree plan {"), "{out}");
    let (code, _, err) = cli(&["plan", &demo(), "--goal", "pos == 100"]);
    assert_eq!(code, EXIT_FINDINGS);
    assert!(err.contains("unrefined goal `pos == 100"), "{err}");
    let (code, _, _) = cli(&["plan", &demo(), "--goal", "pos =="]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn run_prints_a_trace_ending_in_success() {
    let (code, out, err) = cli(&["run", &demo(), "--answers", &answers()]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.lines().last().unwrap().ends_with("status=S t=13.0"), "{out}");
    assert!(err.contains("root S after 14 steps"), "{err}");
    let (code, out, _) = cli(&["run", &demo(), "--answers", &answers(), "--format", "text"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("AXIS"), "{out}");
}

#[test]
fn seeded_async_runs_are_byte_identical() {
    let args = ["run", &demo(), "--answers", &answers(), "--mode", "async", "--jitter", "2", "--seed", "11"];
    let (code, one, _) = cli(&args);
    assert_eq!(code, EXIT_OK);
    let (_, two, _) = cli(&args);
    assert_eq!(one, two);
}

#[test]
fn run_flags_are_checked() {
    let (code, _, _) = cli(&["run", &demo(), "--crash", "AXIS@3"]);
    assert_eq!(code, EXIT_USAGE);
    let (code, _, _) = cli(&["run", &demo(), "--inject", "AXIS:error=true"]);
    assert_eq!(code, EXIT_USAGE);
    let (code, _, _) = cli(&["run", &demo(), "--set", "NOWHERE.x=1", "--answers", &answers()]);
    assert_eq!(code, EXIT_USAGE);
    let (code, _, _) = cli(&["frobnicate"]);
    assert_eq!(code, EXIT_USAGE);
    let (code, out, _) = cli(&["--help"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("check-protocol"), "{out}");
}

#[test]
fn crashed_axis_fails_the_run() {
    let (code, out, err) =
        cli(&["run", &demo(), "--answers", &answers(), "--mode", "async", "--crash", "AXIS@2", "--timeout", "4"]);
    assert_eq!(code, EXIT_FINDINGS, "{out}{err}");
    assert!(out.lines().last().unwrap().contains("node=BASE/base status=F"), "{out}");
}

#[test]
fn fts_certifies_local_trees() {
    let (code, out, _) = cli(&["fts", &demo(), "--tree", "robot_main", "--vary", "power", "--vary", "error", "--vary", "pos=0..20"]);
    assert_eq!(code, EXIT_OK, "{out}");
    assert!(out.starts_with("finite-time successful: 84 states"), "{out}");
    let (code, out, _) = cli(&[
        "fts", &demo(), "--tree", "axis_main", "--vary", "power", "--vary", "error",
        "--set", "target=30", "--set", "target_set=true",
    ]);
    assert_eq!(code, EXIT_OK, "{out}");
    // Without a target the axis needs the operator host.
    let (code, out, _) = cli(&["fts", &demo(), "--tree", "axis_main", "--vary", "power"]);
    assert_eq!(code, EXIT_FINDINGS);
    assert!(out.contains("2 of 2 states miss Success"), "{out}");
}

#[test]
fn binary_reads_answers_from_stdin() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_btweave"))
        .args(["run", &demo()])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"100\n").unwrap();
    let done = child.wait_with_output().unwrap();
    assert_eq!(done.status.code(), Some(EXIT_OK));
    let out = String::from_utf8(done.stdout).unwrap();
    assert_eq!(out.lines().last(), Some("k=13 node=BASE/base status=S t=13.0"));
}
