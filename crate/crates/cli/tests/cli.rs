//! End-to-end checks of the `exitlab` binary: exit codes, config error
//! reporting, override precedence, and the shape of emitted files.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn exitlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_exitlab"))
        .args(args)
        .output()
        .expect("binary should spawn")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).expect("config should write");
    path.to_str().expect("utf-8 path").to_string()
}

fn read_json(path: &Path) -> serde_json::Value {
    let text = fs::read_to_string(path).expect("file should exist");
    serde_json::from_str(&text).expect("file should be valid JSON")
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("process should not be killed")
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

#[test]
fn unknown_config_key_exits_2_and_names_the_line() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "bad.conf", "statistic = sr\nbogus_key = 1\n");
    let out = exitlab(&["run", "--config", &config]);
    assert_eq!(code(&out), 2, "stderr: {}", stderr(&out));
    let msg = stderr(&out);
    assert!(msg.contains("bad.conf:2"), "missing location in: {msg}");
    assert!(msg.contains("bogus_key"), "missing key name in: {msg}");
}

#[test]
fn missing_config_file_is_a_config_error() {
    let out = exitlab(&["run", "--config", "/nonexistent/never.conf"]);
    assert_eq!(code(&out), 2, "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("never.conf"), "stderr: {}", stderr(&out));
}

#[test]
fn coarse_grid_exits_2() {
    let dir = TempDir::new().unwrap();
    let config = write_config(
        dir.path(),
        "qsd.conf",
        "statistic = sr\nmodel.kind = exponential-scale\nmodel.q = 3\nthreshold = 40\ngrid_m = 10\n",
    );
    let out = exitlab(&["qsd", "--config", &config, "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 2, "stderr: {}", stderr(&out));
}

#[test]
fn stalled_power_iteration_exits_3() {
    let dir = TempDir::new().unwrap();
    let config = write_config(
        dir.path(),
        "qsd.conf",
        "statistic = sr\nmodel.kind = exponential-scale\nmodel.q = 3\nthreshold = 40\nmax_iterations = 2\n",
    );
    let out = exitlab(&["qsd", "--config", &config, "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 3, "stderr: {}", stderr(&out));
}

#[test]
fn out_of_range_initial_state_exits_4() {
    let dir = TempDir::new().unwrap();
    let config = write_config(
        dir.path(),
        "run.conf",
        "statistic = cusum-exp-scale\nmodel.kind = exponential-scale\nmodel.q = 3\n\
         threshold = 13\ninitial_state = 0.5\nreplications = 100\n",
    );
    let out = exitlab(&["run", "--config", &config, "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 4, "stderr: {}", stderr(&out));
}

#[test]
fn run_emits_summary_near_the_known_mean() {
    let dir = TempDir::new().unwrap();
    let config = write_config(
        dir.path(),
        "run.conf",
        "statistic = sr\nmodel.kind = exponential-scale\nmodel.q = 3\nthreshold = 40\n\
         replications = 10000\nseed = 1\noutputs = samples,qq,survival,mgf\n",
    );
    let out_dir = dir.path().join("out");
    let out = exitlab(&["run", "--config", &config, "--out-dir", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));

    let summary = read_json(&out_dir.join("summary.json"));
    let mean = summary["summary"]["mean"].as_f64().unwrap();
    // The true mean is near 160; ten thousand replications put the standard
    // error around 1.6, so a 10% band is a formality.
    assert!((144.0..=176.0).contains(&mean), "mean {mean} outside 10% band");
    assert_eq!(summary["summary"]["count"].as_u64().unwrap(), 10_000);
    assert_eq!(summary["summary"]["censored"].as_u64().unwrap(), 0);
    assert!(summary["ks_exp1"].as_f64().unwrap() < 0.05);

    for file in ["samples.csv", "qq.csv", "survival.csv", "mgf.csv", "manifest.json"] {
        assert!(out_dir.join(file).exists(), "{file} missing");
    }
    // One exit time per line after the comment block and header.
    let samples = fs::read_to_string(out_dir.join("samples.csv")).unwrap();
    let data_lines = samples
        .lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty() && *l != "exit_time")
        .count();
    assert_eq!(data_lines, 10_000);

    let manifest = read_json(&out_dir.join("manifest.json"));
    assert_eq!(manifest["command"].as_str().unwrap(), "run");
    assert_eq!(manifest["master_seed"].as_u64().unwrap(), 1);
}

#[test]
fn fixture_solve_matches_the_analytic_rate() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "fixture.conf", "fixture = two-cell\n");
    let out_dir = dir.path().join("out");
    let out = exitlab(&["qsd", "--config", &config, "--out-dir", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));

    // The fixture's transition matrix [[0.5, 0.2], [0.1, 0.6]] has dominant
    // eigenvalue 0.7 with left eigenvector (1/3, 2/3), so the exit rate is
    // exactly 0.3.
    let report = read_json(&out_dir.join("qsd.json"));
    let p_a = report["p_a"].as_f64().unwrap();
    assert!((p_a - 0.3).abs() < 1e-9, "p_a = {p_a}");
}

#[test]
fn reps_flag_beats_desk_flag() {
    let dir = TempDir::new().unwrap();
    let config = write_config(
        dir.path(),
        "run.conf",
        "statistic = sr\nmodel.kind = exponential-scale\nmodel.q = 3\nthreshold = 20\nseed = 2\n",
    );
    let desk_dir = dir.path().join("desk");
    let out = exitlab(&[
        "run", "--config", &config, "--desk", "--out-dir", desk_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let summary = read_json(&desk_dir.join("summary.json"));
    assert_eq!(summary["summary"]["count"].as_u64().unwrap(), 10_000);

    let reps_dir = dir.path().join("reps");
    let out = exitlab(&[
        "run", "--config", &config, "--desk", "--reps", "2000",
        "--out-dir", reps_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let summary = read_json(&reps_dir.join("summary.json"));
    assert_eq!(summary["summary"]["count"].as_u64().unwrap(), 2_000);
}
