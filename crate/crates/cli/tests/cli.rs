use std::path::Path;
use std::process::{Command, Output};

fn cubeshot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cubeshot"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    for out in [&a, &b] {
        let o = cubeshot(&["gen", "--n", "10", "--p", "0.5", "--seed", "42", "--out", path(out)]);
        assert!(o.status.success());
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert!(text.starts_with("cube 10 2\n"));
}

#[test]
fn seed_is_required() {
    let o = cubeshot(&["gen", "--n", "6", "--p", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_flag_is_usage_error() {
    let o = cubeshot(&["count-types", "--n", "2", "--q", "2", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn count_types_example() {
    let o = cubeshot(&["count-types", "--n", "2", "--q", "2"]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8(o.stdout).unwrap().trim(), "6");
}

#[test]
fn pipeline_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("src.txt");
    let balls = dir.path().join("balls.txt");
    let rec = dir.path().join("rec.txt");
    let log = dir.path().join("log.txt");
    for r in ["2", "3"] {
        assert!(cubeshot(&["gen", "--n", "6", "--p", "0.5", "--seed", "7", "--out", path(&src)]).status.success());
        let o = cubeshot(&["balls", "--in", path(&src), "--r", r, "--out", path(&balls)]);
        assert!(o.status.success());
        let o = cubeshot(&[
            "reconstruct",
            "--in",
            path(&balls),
            "--r",
            r,
            "--out",
            path(&rec),
            "--log",
            path(&log),
            "--ref",
            path(&src),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let o = cubeshot(&["verify", "--in", path(&rec), "--ref", path(&src)]);
        assert_eq!(o.status.code(), Some(0));
        assert_eq!(String::from_utf8(o.stdout).unwrap().trim(), "equivalent");
    }
}

#[test]
fn verify_reports_inequivalent() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    std::fs::write(&a, "cube 2 2\n0 0 0 1\n").unwrap();
    std::fs::write(&b, "cube 2 2\n0 1 1 1\n").unwrap();
    let o = cubeshot(&["verify", "--in", path(&a), "--ref", path(&b), "--mode", "exact"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(String::from_utf8(o.stdout).unwrap().trim(), "inequivalent");
}

#[test]
fn bad_input_file_is_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.txt");
    std::fs::write(&a, "not a colouring\n").unwrap();
    let o = cubeshot(&["balls", "--in", path(&a), "--r", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn budget_error_is_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    assert!(cubeshot(&["gen", "--n", "9", "--p", "0.5", "--seed", "1", "--out", path(&a)]).status.success());
    assert!(cubeshot(&["gen", "--n", "9", "--p", "0.5", "--seed", "2", "--out", path(&b)]).status.success());
    let o = cubeshot(&["verify", "--in", path(&a), "--ref", path(&b), "--mode", "exact"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn classify_antipodal_odd() {
    let o = cubeshot(&["classify", "--builtin", "antipodal-odd", "--n", "4"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for line in ["automorphism false", "local true", "diagonal true", "self_dual false"] {
        assert!(text.lines().any(|l| l == line), "missing `{line}` in\n{text}");
    }
}

#[test]
fn harper_table() {
    let o = cubeshot(&["harper", "--n", "4", "--len", "8"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "len closed open bound");
    assert_eq!(lines[5], "4 11 11 6");
    assert_eq!(lines[9], "8 14 14 -");
}

#[test]
fn experiment_csv() {
    let args = [
        "experiment", "--n", "6", "--p", "0.5", "--r", "2", "--trials", "5", "--seed", "3", "--statistic", "distinct",
    ];
    let a = cubeshot(&args);
    let b = cubeshot(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.starts_with("trial,seed,outcome,value\n"));
    assert_eq!(text.lines().count(), 7);
    assert!(text.lines().last().unwrap().starts_with("summary,3,"));
}
