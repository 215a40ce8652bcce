use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dr_core::scenario::{series_to_csv, synthetic_renewable_days, synthetic_temperature_days};
use sha2::{Digest, Sha256};

fn drsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drsim")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = drsim(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn check_meta(dir: &Path, expected: &[&str]) {
    let meta = fs::read_to_string(dir.join("run_meta.txt")).unwrap();
    let mut seen = Vec::new();
    for line in meta.lines().filter(|l| l.starts_with("sha256 ")) {
        let mut parts = line.split(' ').skip(1);
        let (hash, name) = (parts.next().unwrap(), parts.next().unwrap());
        let digest: String = Sha256::digest(fs::read(dir.join(name)).unwrap())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect();
        assert_eq!(hash, digest, "{name}");
        seen.push(name.to_string());
    }
    for name in expected {
        assert!(seen.iter().any(|s| s == name), "{name} missing from {meta}");
    }
}

#[test]
fn warmup_writes_curves_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("w");
    let stdout = ok(&["warmup", "--n", "10", "--grid", "501", "--out", dir.to_str().unwrap()]);
    assert!(stdout.starts_with("dm "));
    let curves = fs::read_to_string(dir.join("curves.csv")).unwrap();
    assert_eq!(curves.lines().count(), 502);
    assert!(curves.starts_with("z,l,u_plus,u_minus,u\n"));
    assert!(fs::read_to_string(dir.join("figure.svg")).unwrap().contains("<polyline"));
    check_meta(&dir, &["curves.csv", "table.csv", "figure.svg"]);
}

#[test]
fn warmup_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    ok(&["warmup", "--seed", "4", "--grid", "100", "--out", a.to_str().unwrap()]);
    ok(&["warmup", "--seed", "4", "--grid", "100", "--out", b.to_str().unwrap()]);
    assert_eq!(fs::read(a.join("table.csv")).unwrap(), fs::read(b.join("table.csv")).unwrap());
}

#[test]
fn direct_on_population_file() {
    let tmp = tempfile::tempdir().unwrap();
    let pop = tmp.path().join("dryers.txt");
    fs::write(
        &pop,
        "population n=2 horizon=3\nset appliance energy=3 periods=1,2 horizon=3\nset appliance energy=3 periods=1,2 horizon=3\n",
    )
    .unwrap();
    let dir = tmp.path().join("d");
    let stdout = ok(&["direct", "--population", pop.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert!(stdout.contains("brute force 3.000000"), "{stdout}");
    let table = fs::read_to_string(dir.join("table.csv")).unwrap();
    assert!(table.contains("brute_force,3\n"));
    check_meta(&dir, &["table.csv", "curves.csv"]);
}

#[test]
fn optimize_random_segments() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("o");
    ok(&["optimize", "--n", "30", "--iterations", "50", "--rho", "pos:2", "--out", dir.to_str().unwrap()]);
    let trace = fs::read_to_string(dir.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 51);
    check_meta(&dir, &["trace.csv", "table.csv", "curves.csv", "figure.svg"]);
}

#[test]
fn lln_small_run() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("l");
    let stdout = ok(&["lln", "--ns", "5,50", "--dirs", "100", "--seeds", "2", "--out", dir.to_str().unwrap()]);
    assert_eq!(stdout.lines().count(), 2);
    assert_eq!(fs::read_to_string(dir.join("table.csv")).unwrap().lines().count(), 5);
}

#[test]
fn casestudy_and_day_replay_from_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let temps = tmp.path().join("t.csv");
    let sun = tmp.path().join("s.csv");
    fs::write(&temps, series_to_csv(&synthetic_temperature_days(5, 1))).unwrap();
    fs::write(&sun, series_to_csv(&synthetic_renewable_days(5, 2))).unwrap();
    let dir = tmp.path().join("c");
    let common = [
        "--n",
        "3",
        "--iterations",
        "200",
        "--exponents",
        "1,inf",
        "--temperature",
        temps.to_str().unwrap(),
        "--renewable",
        sun.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ];
    let stdout = ok(&[&["casestudy"][..], &common].concat());
    assert!(stdout.contains("s=1") && stdout.contains("s=inf"), "{stdout}");
    let table = fs::read_to_string(dir.join("table.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);
    let curves = fs::read_to_string(dir.join("curves.csv")).unwrap();
    assert_eq!(curves.lines().count(), 25);
    check_meta(&dir, &["table.csv", "curves.csv", "figure.svg"]);

    ok(&[&["evaluate-days", "--days", "2"][..], &common].concat());
    let days = fs::read_to_string(dir.join("trace.csv")).unwrap();
    assert_eq!(days.lines().next().unwrap(), "day,savings_s1,savings_sinf");
    assert_eq!(days.lines().count(), 3);
}

#[test]
fn rejects_bad_arguments() {
    let out = drsim(&["optimize", "--rho", "lp:0.5"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("invalid grid cost"));

    let out = drsim(&["casestudy", "--temperature", "x.csv"]);
    assert!(!out.status.success());

    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.txt");
    fs::write(&bad, "population n=1 horizon=2\nset segment a=1\n").unwrap();
    let out = drsim(&["direct", "--population", bad.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"), "{}", String::from_utf8_lossy(&out.stderr));
}
