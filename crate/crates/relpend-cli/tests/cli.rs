//! End-to-end checks of the binary: exit-code contract, strict config
//! validation, artifact layout, and byte-level determinism of the CSV data.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_relpend")
}

fn write(path: &Path, text: &str) {
    fs::write(path, text).unwrap();
}

fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(bin()).args(args).current_dir(cwd).output().unwrap()
}

const RESCALED_PENDULUM: &str = "S = 1\nT = 1\nfbar = 0\ng.harmonics = (1, 0, -6.283185307179586)\nf.harmonics = (1, 0.3, 0)\n";

#[test]
fn no_args_prints_full_help() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in [
        "simulate", "poincare", "factor-check", "genfun-surface", "mather", "hull",
        "boundedness", "escape", "subharmonic", "quasiperiodic", "expansion", "moser-report",
    ] {
        assert!(text.contains(name), "help does not list {name}");
    }
}

#[test]
fn help_for_one_command_lists_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["help", "boundedness"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("iterates"));
    assert!(text.contains("bound"));
}

#[test]
fn unknown_command_suggests_nearest() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["boundednes"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("boundedness"), "no suggestion in: {err}");
    // Machine-parsable trailer on the last line.
    let last = err.lines().last().unwrap();
    let parsed: serde_json::Value = serde_json::from_str(last).unwrap();
    assert_eq!(parsed["exit"], 2);
}

#[test]
fn boundedness_small_budget_passes_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("model.txt"), RESCALED_PENDULUM);
    write(
        &dir.path().join("run.cfg"),
        "command = boundedness\nmodel = model.txt\np_count = 5\np_min = -4\np_max = 4\niterates = 80\nbound = 5\n",
    );
    let out = run(&["run", "--config", "run.cfg", "--out", "a"], dir.path());
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    for name in ["sweep.csv", "report.json", "manifest.json"] {
        assert!(dir.path().join("a").join(name).exists(), "missing artifact {name}");
    }
    let out2 = run(&["boundedness", "--config", "run.cfg", "--out", "b"], dir.path());
    assert_eq!(out2.status.code(), Some(0));
    let a = fs::read(dir.path().join("a/sweep.csv")).unwrap();
    let b = fs::read(dir.path().join("b/sweep.csv")).unwrap();
    assert_eq!(a, b, "sweep.csv is not byte-identical across runs");

    // The manifest lists each artifact with its content hash.
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "boundedness");
    assert_eq!(manifest["verdict"], "PASS");
    let names: Vec<&str> =
        manifest["artifacts"].as_array().unwrap().iter().map(|a| a["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"sweep.csv") && names.contains(&"report.json"));
    for artifact in manifest["artifacts"].as_array().unwrap() {
        assert_eq!(artifact["sha256"].as_str().unwrap().len(), 64);
    }
}

#[test]
fn boundedness_tiny_bound_fails_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("model.txt"), RESCALED_PENDULUM);
    write(
        &dir.path().join("run.cfg"),
        "command = boundedness\nmodel = model.txt\np_count = 3\np_min = -2\np_max = 2\niterates = 40\nbound = 1e-12\n",
    );
    let out = run(&["run", "--config", "run.cfg"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stdout).unwrap().contains("FAIL"));
}

#[test]
fn escape_with_zero_mean_is_a_precondition_error() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("model.txt"), RESCALED_PENDULUM); // fbar = 0
    write(&dir.path().join("run.cfg"), "command = escape\nmodel = model.txt\niterates = 10\n");
    let out = run(&["run", "--config", "run.cfg"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("nonzero-mean"));
}

#[test]
fn escape_on_drift_model_passes() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("model.txt"), "S = 1\nT = 1\nfbar = 0.5\n");
    write(&dir.path().join("run.cfg"), "command = escape\nmodel = model.txt\np0 = 5\niterates = 50\nscan_levels = 2\n");
    let out = run(&["run", "--config", "run.cfg"], dir.path());
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/report.json")).unwrap()).unwrap();
    assert!((report["slope"].as_f64().unwrap() - 0.5).abs() < 1e-9);
}

#[test]
fn mather_rejects_inadmissible_rotation() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("model.txt"), RESCALED_PENDULUM);
    write(&dir.path().join("run.cfg"), "command = mather\nmodel = model.txt\nwinding = 3\nperiods = 1\n");
    let out = run(&["run", "--config", "run.cfg"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("admissible range"));
}

#[test]
fn config_violations_are_all_reported_with_lines() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("model.txt"), RESCALED_PENDULUM);
    write(
        &dir.path().join("run.cfg"),
        "command = boundedness\nmodel = model.txt\ntol = 1e-20\ntol = 1e-9\nbogus_key = 1\n",
    );
    let out = run(&["run", "--config", "run.cfg"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 3") && err.contains("admissible range"), "range violation missing: {err}");
    assert!(err.contains("line 4") && err.contains("duplicate key 'tol'") && err.contains("line 3"));
    assert!(err.contains("unknown key 'bogus_key'"));
}

#[test]
fn command_line_name_must_match_config() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("model.txt"), RESCALED_PENDULUM);
    write(&dir.path().join("run.cfg"), "command = escape\nmodel = model.txt\n");
    let out = run(&["boundedness", "--config", "run.cfg"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("asked for 'boundedness'"));
}

#[test]
fn simulate_writes_jacobian_columns_on_request() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("model.txt"), RESCALED_PENDULUM);
    write(
        &dir.path().join("run.cfg"),
        "command = simulate\nmodel = model.txt\nt1 = 2\nq0 = 0.1\np0 = 0.5\nsamples = 10\njacobian = 1\n",
    );
    let out = run(&["run", "--config", "run.cfg"], dir.path());
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("out/trajectory.csv")).unwrap();
    assert!(csv.lines().next().unwrap().contains("J11"));
    assert_eq!(csv.lines().count(), 12); // header + 11 samples
}

#[test]
fn expansion_runs_on_bound_unit_model() {
    let dir = tempfile::tempdir().unwrap();
    write(
        &dir.path().join("model.txt"),
        "S = 1\nT = 1\nfbar = 0\ng.harmonics = (1, 0, -0.15915494309189535)\n",
    );
    write(
        &dir.path().join("run.cfg"),
        "command = expansion\nmodel = model.txt\ndeltas = 0.1, 0.05\ngrid = 32\ntol = 1e-10\n",
    );
    let out = run(&["run", "--config", "run.cfg"], dir.path());
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/report.json")).unwrap()).unwrap();
    assert_eq!(report["strictly_decreasing"], true);
}

#[test]
fn subharmonic_certificate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("model.txt"), "S = 1\nT = 1\nfbar = 0\ng.harmonics = (1, 0, -6.283185307179586)\nf.harmonics = (1, 0.1, 0)\n");
    write(
        &dir.path().join("run.cfg"),
        "command = subharmonic\nmodel = model.txt\nwinding = 1\nperiods = 2\nn_factors = 4\n",
    );
    let out = run(&["run", "--config", "run.cfg"], dir.path());
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/report.json")).unwrap()).unwrap();
    assert!(report["translation_defect"].as_f64().unwrap() < 1e-5);
}
