use std::fs;
use std::path::Path;
use std::process::Command;

use convexlift::cli::{run, EXIT_INPUT, EXIT_INVARIANT, EXIT_OK};
use serde_json::Value;

fn invoke(sub: &str, config: &Path, out: &Path, extra: &[&str]) -> i32 {
    let mut args = vec![
        "convexlift",
        sub,
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    run(args)
}

fn manifest(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn iso_square_reports_both_sides() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("iso.conf");
    fs::write(&config, "# square at low resolution\n[iso]\nshape = square\nresolution = 16\n").unwrap();
    let out = dir.path().join("out");
    assert_eq!(invoke("iso", &config, &out, &[]), EXIT_OK);
    let m = manifest(&out);
    assert_eq!(m["status"], "ok");
    assert_eq!(m["subcommand"], "iso");
    let (lhs, rhs) = (m["results"]["lhs"].as_f64().unwrap(), m["results"]["rhs"].as_f64().unwrap());
    assert!((lhs - std::f64::consts::PI.sqrt()).abs() < 1e-12);
    assert_eq!(rhs, 2.0);
    assert!(out.join("chain.csv").exists());
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    for (sub, text) in [
        ("iso", "resolutoin = 16\n"),
        ("iso", "resolution = 16\nresolution = 32\n"),
        ("iso", "[abi]\nresolution = 16\n"),
        ("abi", "t_end = 0.1\nsteps = 10\n"),
        ("abi", "profile = spiral 1\n"),
        ("ot", "source = a.csv\n"),
    ] {
        let config = dir.path().join("bad.conf");
        fs::write(&config, text).unwrap();
        assert_eq!(invoke(sub, &config, &out, &[]), EXIT_INPUT, "{sub}: {text}");
    }
    let missing = dir.path().join("missing.conf");
    assert_eq!(invoke("iso", &missing, &out, &[]), EXIT_INPUT);
    assert_eq!(run(["convexlift", "fluid", "--config", "x.conf"]), EXIT_INPUT);
}

#[test]
fn ot_reads_measures_next_to_the_config() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("a.csv"), "x1,weight\n0,0.5\n1,0.5\n").unwrap();
    fs::write(dir.path().join("b.csv"), "x1,weight\n2,0.5\n3,0.5\n").unwrap();
    let config = dir.path().join("ot.conf");
    fs::write(&config, "source = a.csv\ntarget = b.csv\n").unwrap();
    let out = dir.path().join("out");
    assert_eq!(invoke("ot", &config, &out, &[]), EXIT_OK);
    let m = manifest(&out);
    // shift by 2: cost |2|^2 / 2
    assert!((m["results"]["quadratic_cost"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert_eq!(m["failed_invariants"], Value::Array(vec![]));
    assert!(out.join("plan.csv").exists() && out.join("potentials.csv").exists());
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("ot.conf");
    fs::write(&config, "atoms = 12\nseed = 3\n").unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    assert_eq!(invoke("ot", &config, &a, &[]), EXIT_OK);
    assert_eq!(invoke("ot", &config, &b, &["--seed", "3"]), EXIT_OK);
    assert_eq!(invoke("ot", &config, &c, &["--seed", "4"]), EXIT_OK);
    let read = |d: &Path| fs::read(d.join("source.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
    assert_eq!(manifest(&c)["seed"], 4);
}

#[test]
fn abi_rest_state_is_clean() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("abi.conf");
    fs::write(&config, "profile = rest\ncells = 32\nsteps = 20\n").unwrap();
    let out = dir.path().join("out");
    assert_eq!(invoke("abi", &config, &out, &[]), EXIT_OK);
    let series = fs::read_to_string(out.join("series.csv")).unwrap();
    assert_eq!(series.lines().count(), 22);
    assert!(out.join("final.csv").exists());
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("euler.conf");
    // omega (t1 - t0) = 4 > pi
    fs::write(&config, "omega = 4\ngrid = 16\nlevels = 5\n").unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_convexlift"))
        .args(["euler", "--config", config.to_str().unwrap(), "--out"])
        .arg(dir.path().join("out"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(EXIT_INVARIANT));
    let status = Command::new(env!("CARGO_BIN_EXE_convexlift")).arg("--help").status().unwrap();
    assert_eq!(status.code(), Some(EXIT_OK));
}

#[test]
fn scl_restarts_from_its_own_dump() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("a.conf");
    fs::write(&config, "initial = sine 0.5 0.4\ncells = 64\nn_a = 16\nt_end = 0.1\n").unwrap();
    let first = dir.path().join("first");
    assert_eq!(invoke("scl", &config, &first, &[]), EXIT_OK);
    fs::copy(first.join("initial.csv"), dir.path().join("u0.csv")).unwrap();
    let config = dir.path().join("b.conf");
    fs::write(&config, "initial = csv u0.csv\ncells = 64\nn_a = 16\nt_end = 0.1\n").unwrap();
    let second = dir.path().join("second");
    assert_eq!(invoke("scl", &config, &second, &[]), EXIT_OK);
    assert_eq!(fs::read(first.join("lifted.csv")).unwrap(), fs::read(second.join("lifted.csv")).unwrap());
    // a dump fixes the grid
    fs::write(&config, "initial = csv u0.csv\ncells = 32\n").unwrap();
    assert_eq!(invoke("scl", &config, &second, &[]), EXIT_INPUT);
    fs::write(&config, "pipeline = compare\ninitial = csv u0.csv\ncells = 64\n").unwrap();
    assert_eq!(invoke("scl", &config, &second, &[]), EXIT_INPUT);
}
