use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/synthetic_panel.csv")
}

fn riskdyn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_riskdyn"))
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(riskdyn(&["--help"]).status.code(), Some(0));
    assert_eq!(riskdyn(&["--version"]).status.code(), Some(0));
}

#[test]
fn bad_arguments_exit_one() {
    assert_eq!(riskdyn(&["run", "--horizon", "2"]).status.code(), Some(1));
    assert_eq!(riskdyn(&["frobnicate"]).status.code(), Some(1));
    let out = tempfile::tempdir().unwrap();
    let input = fixture();
    let args = [
        "cluster",
        "--input",
        input.to_str().unwrap(),
        "--out",
        out.path().to_str().unwrap(),
        "--alpha",
        "1.5",
    ];
    assert_eq!(riskdyn(&args).status.code(), Some(1));
}

#[test]
fn missing_input_exits_two() {
    let out = tempfile::tempdir().unwrap();
    let res = riskdyn(&[
        "ingest",
        "--input",
        "/nonexistent/wri.csv",
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("error"));
}

#[test]
fn stage_commands_write_their_artifacts() {
    let out = tempfile::tempdir().unwrap();
    let input = fixture();
    let base = [
        "--input",
        input.to_str().unwrap(),
        "--out",
        out.path().to_str().unwrap(),
    ];
    for (cmd, file) in [
        ("ingest", "ingest.json"),
        ("outliers", "outliers.csv"),
        ("cluster", "clusters.json"),
        ("spread", "transduction.json"),
        ("scenario", "table3.csv"),
    ] {
        let mut args = vec![cmd];
        args.extend(base);
        let res = riskdyn(&args);
        assert_eq!(
            res.status.code(),
            Some(0),
            "{cmd}: {}",
            String::from_utf8_lossy(&res.stderr)
        );
        assert!(
            out.path().join(file).is_file(),
            "{cmd} did not write {file}"
        );
    }
    let mut args = vec!["classify", "--model", "lr", "--horizon", "1"];
    args.extend(base);
    assert_eq!(riskdyn(&args).status.code(), Some(0));
    let table = std::fs::read_to_string(out.path().join("table2.csv")).unwrap();
    assert_eq!(table.lines().count(), 2, "{table}");
}
