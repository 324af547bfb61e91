use std::path::Path;
use std::process::{Command, Output};

use gshift::cli::{Record, ReportEnvelope};
use tempfile::TempDir;

fn gshift(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gshift"))
        .args(args)
        .env("GSHIFT_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn read_report(path: &Path) -> ReportEnvelope {
    ReportEnvelope::from_json(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const SLAB_BOUNDS: &str = r#"{
    "dim": 2, "u": [1, 0], "t_grid": [0, 1, 2],
    "body": {"kind": "slab", "normal": [1, 0], "halfwidth": 1}
}"#;

#[test]
fn bounds_report_and_csv() {
    let dir = TempDir::new().unwrap();
    let config = write(&dir, "bounds.json", SLAB_BOUNDS);
    let out = dir.path().join("report.json");
    let csv = dir.path().join("bounds.csv");
    let o = gshift(&["bounds", "--config", &config, "--out", out.to_str().unwrap(), "--csv", csv.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("\"upper\": 6.99073112371836"), "{text}");
    let report = read_report(&out);
    assert_eq!(report.command, "bounds");
    assert_eq!(report.records.len(), 3);
    assert_eq!(ReportEnvelope::from_json(&report.to_json()).unwrap(), report);

    let csv = std::fs::read_to_string(&csv).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "t,lower,upper,exponent_a,exactness");
    assert!(rows[1].starts_with("0.0000000000000000e0,1.0000000000000000e0,1.0000000000000000e0,"));
    assert!(rows[3].ends_with(",exact"));
}

#[test]
fn report_goes_to_stdout_without_out() {
    let dir = TempDir::new().unwrap();
    let config = write(&dir, "bounds.json", SLAB_BOUNDS);
    let o = gshift(&["bounds", "--config", &config]);
    assert!(o.status.success());
    let report = ReportEnvelope::from_json(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!(report.config.t_grid, vec![0.0, 1.0, 2.0]);
}

#[test]
fn config_errors_name_the_field() {
    let dir = TempDir::new().unwrap();
    let config = write(
        &dir,
        "bad.json",
        r#"{"dim": 2, "u": [1, 0], "t_grid": [1, -2], "body": {"kind": "lp_ball", "p": 2, "radius": 1}}"#,
    );
    let o = gshift(&["bounds", "--config", &config]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("t_grid[1]"));
}

#[test]
fn verify_exit_status_follows_verdicts() {
    let dir = TempDir::new().unwrap();
    let base = r#"{"dim": 2, "u": [1, 0], "t_grid": [1],
        "body": {"kind": "slab", "normal": [1, 0], "halfwidth": 1},
        "mc": {"samples": 200000, "seed": 11}, "suite": "sandwich"FAULT}"#;
    let good = write(&dir, "good.json", &base.replace("FAULT", ""));
    let o = gshift(&["verify", "--config", &good]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let bad = write(&dir, "bad.json", &base.replace("FAULT", r#", "fault": {"upper_scale": 0.5}"#));
    let out = dir.path().join("bad_report.json");
    let o = gshift(&["verify", "--config", &bad, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("upper_z"));
    let report = read_report(&out);
    assert!(!report.status.pass);
    match &report.records[0] {
        Record::Sandwich { verdict, .. } => assert!(verdict.upper_z > 4.0),
        other => panic!("{other:?}"),
    }
}

#[test]
fn rerunning_the_echoed_config_reproduces_the_records() {
    let dir = TempDir::new().unwrap();
    let config = write(
        &dir,
        "power.json",
        r#"{"dim": 2, "u": [1, 0], "theta_grid": [0.5, 1, 2],
            "body": {"kind": "slab", "normal": [1, 0], "halfwidth": 1},
            "mc": {"samples": 100000, "seed": 3}}"#,
    );
    let first = dir.path().join("first.json");
    assert!(gshift(&["power", "--config", &config, "--out", first.to_str().unwrap()]).status.success());
    let first = read_report(&first);

    let echo = write(&dir, "echo.json", &first.config.to_json());
    let second = dir.path().join("second.json");
    assert!(gshift(&["power", "--config", &echo, "--out", second.to_str().unwrap()]).status.success());
    let second = read_report(&second);
    assert_eq!(first.records, second.records);
    assert!(first.status.pass);
}

#[test]
fn support_command() {
    let dir = TempDir::new().unwrap();
    let config = write(
        &dir,
        "support.json",
        r#"{"dim": 2, "u": [1, 0], "directions": [[1, 0], [0, 1]],
            "body": {"kind": "ellipsoid", "matrix": [[0.25, 0], [0, 0.1111111111111111]]}}"#,
    );
    let csv = dir.path().join("support.csv");
    let o = gshift(&["support", "--config", &config, "--csv", csv.to_str().unwrap()]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(csv).unwrap();
    let values: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!((values[0] - 2.0).abs() < 1e-12);
    assert!((values[1] - 3.0).abs() < 1e-8);
}

#[test]
fn kernels_suite_from_the_binary() {
    let dir = TempDir::new().unwrap();
    let config = write(&dir, "kernels.json", r#"{"dim": 1, "u": [1], "suite": "kernels"}"#);
    let csv = dir.path().join("kernels.csv");
    let o = gshift(&["verify", "--config", &config, "--csv", csv.to_str().unwrap()]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(csv).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.contains(",true,")));
}

#[test]
fn shipped_configs_run_and_pass() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_str().unwrap().to_owned();
        let command = name.split('_').next().unwrap().to_owned();
        let o = gshift(&[&command, "--config", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&o.stderr));
        let report = ReportEnvelope::from_json(&String::from_utf8(o.stdout).unwrap()).unwrap();
        assert!(report.status.pass, "{name}");
        seen += 1;
    }
    assert!(seen >= 5);
}
