use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const FLAT: &str = r#"
seed = 5
[spacetime]
family = "minkowski"
[chart]
lower = [0.0, 0.0, 0.0]
upper = [1.0, 1.0, 1.0]
[grid]
cells = [16, 16, 16]
[spectrum]
count = 2
"#;

const KERR_ERGO: &str = r#"
[spacetime]
family = "kerr"
mass = 1.0
spin = 0.9
[chart]
lower = [1.6, 0.3, 0.0]
upper = [4.0, 2.8, 6.0]
[check]
points = 200
"#;

const ROTATING: &str = r#"
seed = 11
[spacetime]
family = "stationary"
parameters = { w = 0.3 }
lapse = "1 + 0.1*x^2"
shift = ["-w*y", "w*x", "0"]
metric = ["1", "0", "0", "1", "0", "1"]
[chart]
lower = [-1.0, -1.0, -1.0]
upper = [1.0, 1.0, 1.0]
[assemble]
points = 30
"#;

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn stkg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stkg")).args(args).output().unwrap()
}

fn run(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    stkg(&args)
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn record<'a>(r: &'a Value, name: &str) -> &'a Value {
    r["records"].as_array().unwrap().iter().find(|x| x["name"] == name).unwrap_or_else(|| panic!("no record {name}"))
}

#[test]
fn flat_spectrum_matches_three_pi_squared() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "flat.toml", FLAT);
    let out = dir.path().join("out");
    let o = run("spectrum", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("eigenvalues.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("index,eigenvalue,residual"));
    let first: f64 = lines.next().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    let want = 3.0 * std::f64::consts::PI.powi(2);
    assert!((first - want).abs() <= 0.02 * want, "{first}");
    let r = report(&out);
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["verdict"], "pass");
    assert_eq!(r["config"]["spacetime"]["family"], "minkowski");
    assert_eq!(r["tables"][0], "eigenvalues.csv");
    for rec in r["records"].as_array().unwrap() {
        if rec["verdict"] != "info" {
            assert!(rec["tolerance"].is_number() || rec["verdict"] == "pass", "{rec}");
        }
        assert!(!rec["anchor"].as_str().unwrap().is_empty());
    }
}

#[test]
fn unknown_key_is_rejected_before_computation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", &FLAT.replace("count = 2", "count = 2\ncuont = 3"));
    let out = dir.path().join("out");
    let o = run("spectrum", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cuont"));
    assert!(!out.exists());
}

#[test]
fn bad_arguments_exit_with_config_status() {
    let o = stkg(&["spectrum", "--config", "x.toml", "--grid", "8x8"]);
    assert_eq!(o.status.code(), Some(2));
    let o = stkg(&["spectrum", "--config", "/nonexistent/x.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn ergo_crossing_check_names_the_violation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "kerr.toml", KERR_ERGO);
    let out = dir.path().join("out");
    let o = run("check", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(1));
    let r = report(&out);
    assert_eq!(r["verdict"], "fail");
    let t = record(&r, "timelike_killing");
    assert_eq!(t["verdict"], "fail");
    let w: Vec<f64> = serde_json::from_value(t["witness"].clone()).unwrap();
    // The witness lies inside the ergoregion.
    assert!(w[0] * w[0] - 2.0 * w[0] + 0.81 * w[1].cos().powi(2) <= 0.0, "{w:?}");
    assert_eq!(record(&r, "determinant_identity")["verdict"], "pass");
}

#[test]
fn certify_fails_on_ergo_chart_with_witness() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "kerr.toml", KERR_ERGO);
    let out = dir.path().join("out");
    assert_eq!(run("certify", &cfg, &out, &[]).status.code(), Some(1));
    let c = record(&report(&out), "certificate").clone();
    assert_eq!(c["outputs"]["failed_hypothesis"], "timelike_killing");
    assert!(c["witness"].is_array());
}

#[test]
fn reports_are_deterministic_apart_from_timing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "rot.toml", ROTATING);
    let mut reports = Vec::new();
    for n in 0..2 {
        let out = dir.path().join(format!("out{n}"));
        assert_eq!(run("assemble", &cfg, &out, &[]).status.code(), Some(0));
        let mut r = report(&out);
        r.as_object_mut().unwrap().remove("timing");
        reports.push(serde_json::to_string(&r).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    let out = dir.path().join("other");
    run("assemble", &cfg, &out, &["--seed", "12"]);
    let r = report(&out);
    assert_eq!(r["seed"], 12);
}

#[test]
fn report_goes_to_stdout_without_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "rot.toml", ROTATING);
    let o = stkg(&["complete", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["command"], "complete");
    assert_eq!(record(&r, "forced_negative_control")["verdict"], "pass");
}

#[test]
fn undefined_expression_is_an_internal_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "log.toml", &ROTATING.replace("1 + 0.1*x^2", "1 + log(x)"));
    let o = run("check", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn help_documents_csv_columns() {
    let o = stkg(&["spectrum", "--help"]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("index,eigenvalue,residual") && text.contains("--grid"));
}
