use std::fs;
use std::path::Path;
use std::process::Command;

use bwalk_cli::{parse_config, run_experiment, RunError, RunOptions};

const DENSITY: &str = r#"
[experiment]
kind = "density"

[kernel]
d = 1
alpha = 1.0

[dynamics]
times = [2.0]

[numerics]
m = 4096
"#;

fn bwalk(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_bwalk"))
        .args(args)
        .env("BWALK_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn passing_run_writes_every_artifact() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", DENSITY);
    let out = tmp.path().join("run");
    let res = bwalk(&["density", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(
        res.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    for f in [
        "config.toml",
        "kernel.csv",
        "p_t2.csv",
        "checks.csv",
        "summary.json",
        "manifest.json",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
    assert!(!out.join("INVALID").exists());
    let echo = fs::read_to_string(out.join("config.toml")).unwrap();
    assert_eq!(parse_config(&echo, true).unwrap().config.echo(), echo);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "pass");
    assert_eq!(manifest["threads"], 1);
    assert!(manifest["diagnostics"]["aliasing"][0]["estimated_mass"].is_number());
    assert!(manifest["wall_time_s"].is_number());
}

#[test]
fn failed_check_exits_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let text = DENSITY.replace(
        "[numerics]",
        "[checks]\ntail = true\ntail_tol = 1e-6\n\n[numerics]",
    );
    let cfg = write(tmp.path(), "c.toml", &text);
    let out = tmp.path().join("run");
    let res = bwalk(&["density", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stdout).contains("FAIL tail t=2"));
    let summary = fs::read_to_string(out.join("summary.json")).unwrap();
    assert!(summary.contains("\"passed\": false"));
}

#[test]
fn configuration_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write(
        tmp.path(),
        "bad.toml",
        &DENSITY.replace("alpha = 1.0", "alpha = 2.5"),
    );
    let res = bwalk(&["density", "--config", &bad]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("α ∈ (0,2)"));

    let ok = write(tmp.path(), "ok.toml", DENSITY);
    let res = bwalk(&["front", "--config", &ok]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("does not match"));

    let unknown = write(
        tmp.path(),
        "u.toml",
        &format!("{DENSITY}\n[analysis]\nspeed = 3\n"),
    );
    let out = tmp.path().join("u");
    let lenient = bwalk(&[
        "density",
        "--config",
        &unknown,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(lenient.status.code(), Some(0));
    assert!(
        String::from_utf8_lossy(&lenient.stderr).contains("warning: unknown key analysis.speed")
    );
    let strict = bwalk(&["density", "--config", &unknown, "--strict"]);
    assert_eq!(strict.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&strict.stderr).contains("error: unknown key analysis.speed"));
}

#[test]
fn numerical_guards_exit_with_three_and_mark_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let text = DENSITY
        .replace("times = [2.0]", "times = [1.0, 1000.0]")
        .replace("m = 4096", "m = 16384");
    let cfg = write(tmp.path(), "c.toml", &text);
    let out = tmp.path().join("run");
    let res = bwalk(&[
        "density",
        "--config",
        &cfg,
        "--strict",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(3));
    let marker = fs::read_to_string(out.join("INVALID")).unwrap();
    assert!(marker.contains("aliasing guard"), "{marker}");
    // the first time point was written before the guard tripped
    assert!(out.join("p_t1.csv").exists());
    let manifest = fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"invalid\""));

    // without --strict the same run completes and records the excess
    let res = bwalk(&["density", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0));
    assert!(!out.join("INVALID").exists());
    let manifest = fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"exceeded\": true"));
}

#[test]
fn front_window_must_hold_the_front() {
    let text = r#"
[experiment]
kind = "front"
[kernel]
d = 1
alpha = 1.0
[dynamics]
nu = 1.0
times = [6.0, 8.0, 10.0, 12.0]
[numerics]
m = 4096
"#;
    let cfg = parse_config(text, true).unwrap().config;
    let tmp = tempfile::tempdir().unwrap();
    let opts = RunOptions {
        strict: false,
        out: Some(tmp.path().to_path_buf()),
    };
    let err = run_experiment(&cfg, &[], &opts).unwrap_err();
    assert!(matches!(err, RunError::Config(_)), "{err}");
    assert_eq!(err.exit_code(), 2);
    assert!(tmp.path().join("INVALID").exists());
}

#[test]
fn mc_summary_reports_z_scores() {
    let text = r#"
[experiment]
kind = "mc-validate"
[kernel]
d = 1
alpha = 1.0
[dynamics]
nu = 0.5
times = [1.0, 2.0]
[numerics]
m = 1024
[mc]
replicas = 2000
seed = 11
"#;
    let cfg = parse_config(text, true).unwrap().config;
    let tmp = tempfile::tempdir().unwrap();
    let opts = RunOptions {
        strict: false,
        out: Some(tmp.path().to_path_buf()),
    };
    let outcome = run_experiment(&cfg, &[], &opts).unwrap();
    assert!(outcome.passed(), "{:?}", outcome.checks);
    assert_eq!(outcome.diagnostics.mc.len(), 2);
    let times = outcome.results["times"].as_array().unwrap();
    assert!(times
        .iter()
        .all(|t| t["max_abs_z_m1"].as_f64().unwrap() <= 4.0));
    let table = fs::read_to_string(tmp.path().join("mc_vs_solver.csv")).unwrap();
    // header plus five default sites at two times
    assert_eq!(table.lines().count(), 11);
}

#[test]
fn every_shipped_config_parses_strictly() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let text = fs::read_to_string(&path).unwrap();
            parse_config(&text, true).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            n += 1;
        }
    }
    assert!(n >= 6);
}
