//! End-to-end checks of the `zenolink` binary: exit codes, config
//! handling, and output determinism.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn zenolink(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zenolink")).args(args).output().expect("binary runs")
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("zenolink_cli_{tag}_{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    dir
}

/// A config small enough for test turnaround: trimmed u1_quench.
fn small_config(tag: &str) -> (PathBuf, PathBuf) {
    let out_dir = tmp_dir(tag);
    let config = format!(
        r#"
preset = "custom"
backend = "lindblad"
seed = 11
output_dir = "{}"
tol = 1e-7

[time_grid]
t_start = 0.0
t_end = 0.4
points = 5

[model]
kind = "u1"
lambda = 0.25

[sweep]
kappa = [0.0, 2.0]
include_ideal = true
"#,
        out_dir.display()
    );
    let path = std::env::temp_dir().join(format!("zenolink_cli_{tag}_{}.toml", std::process::id()));
    fs::write(&path, config).unwrap();
    (path, out_dir)
}

#[test]
fn run_produces_outputs_and_exit_zero() {
    let (config, out_dir) = small_config("ok");
    let output = zenolink(&["run", config.to_str().unwrap()]);
    assert!(output.status.success(), "stderr: {}", String::from_utf8_lossy(&output.stderr));
    for file in ["ideal.csv", "kappa0.csv", "kappa2.csv", "summary.csv", "plot.py", "manifest.json"] {
        assert!(out_dir.join(file).exists(), "{file} missing");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["failed_cells"], 0);
    assert_eq!(manifest["cells"].as_array().unwrap().len(), 3);
    let _ = fs::remove_dir_all(&out_dir);
    let _ = fs::remove_file(&config);
}

#[test]
fn same_seed_same_bytes() {
    let (config, out_dir) = small_config("det");
    assert!(zenolink(&["run", config.to_str().unwrap()]).status.success());
    let first = fs::read(out_dir.join("kappa2.csv")).unwrap();
    assert!(zenolink(&["run", config.to_str().unwrap()]).status.success());
    let second = fs::read(out_dir.join("kappa2.csv")).unwrap();
    assert_eq!(first, second);
    let _ = fs::remove_dir_all(&out_dir);
    let _ = fs::remove_file(&config);
}

#[test]
fn invalid_config_exits_2_with_diagnostics() {
    let path = std::env::temp_dir().join(format!("zenolink_cli_bad_{}.toml", std::process::id()));
    fs::write(&path, "preset = \"custom\"\nbackend = \"lindblad\"\nsurprise_key = 1\n").unwrap();
    let output = zenolink(&["run", path.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("invalid config"), "stderr: {stderr}");
    let _ = fs::remove_file(&path);

    let output = zenolink(&["run", "/no/such/file.toml"]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn failed_cell_exits_3_but_writes_the_rest() {
    let out_dir = tmp_dir("fail");
    let config_text = format!(
        r#"
preset = "custom"
backend = "trajectory"
trajectories = 4
dt = 0.049
seed = 3
output_dir = "{}"
tol = 1e-7

[time_grid]
t_start = 0.0
t_end = 0.2
points = 3

[model]
kind = "u1"

[sweep]
kappa = [0.5, 2.0]
"#,
        out_dir.display()
    );
    let path = std::env::temp_dir().join(format!("zenolink_cli_fail_{}.toml", std::process::id()));
    fs::write(&path, config_text).unwrap();
    let output = zenolink(&["run", path.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(3));
    assert!(out_dir.join("kappa0p5.csv").exists());
    assert!(!out_dir.join("kappa2.csv").exists());
    let _ = fs::remove_dir_all(&out_dir);
    let _ = fs::remove_file(&path);
}

#[test]
fn preset_output_round_trips() {
    for name in ["u1_quench", "u2_blocks", "spin_size_scan"] {
        let output = zenolink(&["preset", name, "--print-config"]);
        assert!(output.status.success());
        let text = String::from_utf8(output.stdout).unwrap();
        let config = zenolink::experiments::ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(config.preset.as_str(), name);
    }
    assert_eq!(zenolink(&["preset", "nonsense"]).status.code(), Some(2));
}

#[test]
fn fit_recovers_synthetic_power_law() {
    let path = std::env::temp_dir().join(format!("zenolink_cli_fit_{}.csv", std::process::id()));
    let mut csv = String::from("kappa,g2\n");
    for k in [10.0f64, 20.0, 40.0, 80.0] {
        csv.push_str(&format!("{k},{}\n", 3.0 / k));
    }
    fs::write(&path, csv).unwrap();
    let output = zenolink(&["fit", path.to_str().unwrap(), "--x", "kappa", "--y", "g2", "--loglog"]);
    assert!(output.status.success());
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("slope = -1.000000"), "stdout: {stdout}");
    let _ = fs::remove_file(&path);

    let output = zenolink(&["fit", path.to_str().unwrap(), "--x", "kappa", "--y", "g2"]);
    assert_eq!(output.status.code(), Some(2)); // file deleted above
}
