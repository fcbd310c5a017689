use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fantomette"))
        .args(args)
        .output()
        .unwrap()
}

fn small_run(preset: &str, out: &Path) -> Output {
    bin(&[
        "run",
        "--preset",
        preset,
        "--out",
        out.to_str().unwrap(),
        "--players",
        "30",
        "--slots",
        "300",
        "--runs",
        "2",
    ])
}

#[test]
fn rerun_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(small_run("immunity", &a).status.success());
    assert!(small_run("immunity", &b).status.success());
    for f in [
        "metrics.csv",
        "payoffs.csv",
        "finality_events.csv",
        "manifest.txt",
    ] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn manifest_echoes_every_setting() {
    let dir = tempfile::tempdir().unwrap();
    assert!(small_run("baseline", dir.path()).status.success());
    let manifest = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    for line in [
        "preset = baseline",
        "n_players = 30",
        "slots = 300",
        "runs = 2",
        "seed = 1",
        "pun = 6.000000",
    ] {
        assert!(manifest.lines().any(|l| l == line), "{line}");
    }
    assert!(manifest.contains("version = v"));
}

#[test]
fn seed_changes_output() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(small_run("baseline", &a).status.success());
    let out = bin(&[
        "run",
        "--preset",
        "baseline",
        "--out",
        b.to_str().unwrap(),
        "--players",
        "30",
        "--slots",
        "300",
        "--runs",
        "2",
        "--seed",
        "9",
    ]);
    assert!(out.status.success());
    assert_ne!(
        fs::read(a.join("payoffs.csv")).unwrap(),
        fs::read(b.join("payoffs.csv")).unwrap()
    );
}

#[test]
fn unwritable_out_fails() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("plain");
    fs::write(&file, b"").unwrap();
    let out = small_run("baseline", &file.join("x"));
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn bad_config_line_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.conf");
    fs::write(&path, "slots = 10\nnot a pair\n").unwrap();
    let out = bin(&["config", "--config", path.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains('2'));
}

#[test]
fn unknown_preset_is_rejected() {
    assert!(!bin(&["run", "--preset", "nope"]).status.success());
}

#[test]
fn analytics_table_prints_anchors() {
    let out = bin(&["analytics", "--n", "150", "--n_c", "50"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let value = |name: &str| -> f64 {
        let line = text.lines().find(|l| l.starts_with(name)).unwrap();
        line.split_whitespace().nth(1).unwrap().parse().unwrap()
    };
    assert!((value("expected_consecutive") - 0.395).abs() < 0.005);
    assert!((value("harm_probability") - 0.025).abs() < 0.003);
    assert!((value("immunity_ratio") - 1.29).abs() < 0.03);
}

#[test]
fn analytics_preset_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&[
        "run",
        "--preset",
        "analytics_table",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("analytics.csv")).unwrap();
    assert!(csv.starts_with("n,n_c,expected_consecutive"));
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn config_without_flags_prints_defaults() {
    let out = bin(&["config"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("n_players = 150\n"));
    assert!(text.contains("slots = 5000\n"));
    assert!(text.contains("k = 3\n"));
}
