//! Sweep execution, CSV emission, and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::dynamics::{
    integrate_lindblad_with, lindblad::LindbladOptions, projected_evolution_with,
    run_trajectory_ensemble, EnsembleOptions, EvolutionRecord, NoiseSpec, TimeGrid, TraceKind,
};
use crate::error::{Error, Result};
use crate::models::{imperfect_generators, loss_jumps, ImperfectionKind};
use crate::observables::{default_observables, electric_field_operator};

use super::{
    build_model, cell_model, enumerate_cells, fnv1a64, initial_state, BackendKind, CellKey,
    ExperimentConfig, ManifestCell, ManifestFile, ModelConfig, RunManifest,
};

/// Run every sweep cell of the config, write one CSV per cell plus
/// `summary.csv`, `plot.py`, and `manifest.json` (written last,
/// atomically). Failed cells are recorded in the manifest and do not stop
/// the sweep.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunManifest> {
    config.validate()?;
    let started = Instant::now();
    fs::create_dir_all(&config.output_dir)?;

    let cells = enumerate_cells(config);
    let workers = config.effective_workers();

    let results: Vec<(CellKey, u64, std::result::Result<CellOutput, String>, u128)> =
        if workers > 0 {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
            pool.install(|| run_cells(config, &cells))
        } else {
            run_cells(config, &cells)
        };

    let mut outputs = Vec::new();
    let mut manifest_cells = Vec::new();
    let mut failed = 0usize;
    let mut summary_rows: Vec<(CellKey, Vec<(String, f64)>)> = Vec::new();
    let mut series_names: Vec<String> = Vec::new();

    let mut csv_files: Vec<(String, String)> = Vec::new();

    for (cell, seed, outcome, wall_ms) in results {
        let label = cell.label();
        match outcome {
            Ok(out) => {
                let file_name = format!("{label}.csv");
                let path = config.output_dir.join(&file_name);
                fs::write(&path, out.csv.as_bytes())?;
                outputs.push(ManifestFile {
                    path: file_name.clone(),
                    checksum: format!("{:016x}", fnv1a64(out.csv.as_bytes())),
                });
                if series_names.is_empty() {
                    series_names = out.summary.iter().map(|(n, _)| n.clone()).collect();
                }
                summary_rows.push((cell.clone(), out.summary));
                csv_files.push((label.clone(), file_name));
                manifest_cells.push(ManifestCell { label, seed, status: "ok".into(), wall_ms });
            }
            Err(message) => {
                failed += 1;
                manifest_cells.push(ManifestCell {
                    label,
                    seed,
                    status: format!("failed: {message}"),
                    wall_ms,
                });
            }
        }
    }

    append_imperfection_deviation(&mut series_names, &mut summary_rows);
    let summary_csv = render_summary(&series_names, &summary_rows);
    fs::write(config.output_dir.join("summary.csv"), summary_csv.as_bytes())?;
    outputs.push(ManifestFile {
        path: "summary.csv".into(),
        checksum: format!("{:016x}", fnv1a64(summary_csv.as_bytes())),
    });

    let plot = render_plot_script(config, &csv_files);
    fs::write(config.output_dir.join("plot.py"), plot.as_bytes())?;
    outputs.push(ManifestFile {
        path: "plot.py".into(),
        checksum: format!("{:016x}", fnv1a64(plot.as_bytes())),
    });

    let manifest = RunManifest {
        config_hash: format!("{:016x}", fnv1a64(config.to_toml().as_bytes())),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.seed,
        cells: manifest_cells,
        outputs,
        wall_clock_ms: started.elapsed().as_millis(),
        failed_cells: failed,
    };
    write_manifest_atomically(&config.output_dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

fn run_cells(
    config: &ExperimentConfig,
    cells: &[CellKey],
) -> Vec<(CellKey, u64, std::result::Result<CellOutput, String>, u128)> {
    cells
        .par_iter()
        .map(|cell| {
            let seed = cell_seed(config.seed, cell);
            let cell_started = Instant::now();
            let outcome = run_cell(config, cell, seed).map_err(|e| e.to_string());
            (cell.clone(), seed, outcome, cell_started.elapsed().as_millis())
        })
        .collect()
}

/// Per-cell seed derived from the run seed and the cell label, stable
/// under reordering of the sweep lists.
fn cell_seed(seed: u64, cell: &CellKey) -> u64 {
    let mut bytes = seed.to_le_bytes().to_vec();
    bytes.extend_from_slice(cell.label().as_bytes());
    fnv1a64(&bytes)
}

struct CellOutput {
    csv: String,
    /// `(column, value at t_fix)` pairs for the summary table.
    summary: Vec<(String, f64)>,
}

fn run_cell(config: &ExperimentConfig, cell: &CellKey, seed: u64) -> Result<CellOutput> {
    let model = cell_model(&config.model, cell);
    let bundle = build_model(&model)?;
    let psi0 = initial_state(&bundle)?;
    let grid = TimeGrid::uniform(
        config.time_grid.t_start,
        config.time_grid.t_end,
        config.time_grid.points,
    )?;

    // U(1) records the subspace-conditioned field alongside the raw one.
    let is_u1 = matches!(model, ModelConfig::U1(_));
    let mut observables = default_observables(&bundle)?;
    if is_u1 && config.backend != BackendKind::Projected {
        let e_op = electric_field_operator(&bundle)?;
        let p = observables.get("pop_P").expect("U(1) defaults include pop_P").clone();
        observables.push("E_proj", p.matmul(&e_op)?.matmul(&p)?);
    }

    let record = match config.backend {
        BackendKind::Lindblad => {
            let mut opts = LindbladOptions::new(cell.kappa, config.tol);
            opts.observables = Some(observables);
            if cell.epsilon > 0.0 {
                opts.jumps = Some(imperfect_generators(
                    &bundle,
                    cell.epsilon,
                    ImperfectionKind::OnsiteDensity,
                )?);
            }
            if config.sweep.gamma0 > 0.0 {
                opts.extra_jumps = loss_jumps(&bundle, config.sweep.gamma0)?;
            }
            integrate_lindblad_with(&bundle, &opts, &psi0.density(), &grid)?
        }
        BackendKind::Trajectory => {
            let noise = NoiseSpec::white(cell.kappa, seed);
            let mut opts = EnsembleOptions::new(config.trajectories);
            if config.dt > 0.0 {
                opts.dt = Some(config.dt);
            }
            opts.observables = Some(observables);
            run_trajectory_ensemble(&bundle, &noise, &psi0, &grid, &opts)?
        }
        BackendKind::Projected => {
            projected_evolution_with(&bundle, cell.kappa, &psi0.density(), &grid, config.tol, None)?
        }
    };

    let csv = render_cell_csv(&record);
    let summary = summarize(&record, config.t_fix);
    Ok(CellOutput { csv, summary })
}

/// Column layout: `t`, the recorded series (with `E_proj` folded into a
/// conditioned `E_cond = E_proj / pop_P`), then `trace` or `norm`.
fn render_cell_csv(record: &EvolutionRecord) -> String {
    let mut columns: Vec<String> = Vec::new();
    for name in &record.names {
        if name == "E_proj" {
            columns.push("E_cond".into());
        } else {
            columns.push(name.clone());
        }
    }
    let trace_name = match record.trace_kind {
        TraceKind::EnsembleNorm => "norm",
        _ => "trace",
    };

    let mut out = String::new();
    out.push('t');
    for c in &columns {
        out.push(',');
        out.push_str(c);
    }
    out.push(',');
    out.push_str(trace_name);
    out.push('\n');

    let pop = record.series_by_name("pop_P");
    for (i, &t) in record.times.iter().enumerate() {
        out.push_str(&fmt(t));
        for name in &record.names {
            let raw = record.series[name][i];
            let value = if name == "E_proj" {
                match pop {
                    Some(p) if p[i].abs() > 1e-300 => raw / p[i],
                    _ => 0.0,
                }
            } else {
                raw
            };
            out.push(',');
            out.push_str(&fmt(value));
        }
        out.push(',');
        out.push_str(&fmt(record.trace[i]));
        out.push('\n');
    }
    out
}

/// Values at the summary time: one `(name, value)` pair per series plus
/// the trace.
fn summarize(record: &EvolutionRecord, t_fix: f64) -> Vec<(String, f64)> {
    let mut pairs = Vec::new();
    let pop_at = record.value_at("pop_P", t_fix);
    for name in &record.names {
        let value = record.value_at(name, t_fix).unwrap_or(f64::NAN);
        if name == "E_proj" {
            let cond = match pop_at {
                Some(p) if p.abs() > 1e-300 => value / p,
                _ => 0.0,
            };
            pairs.push(("E_cond".to_string(), cond));
        } else {
            pairs.push((name.clone(), value));
        }
    }
    let trace = record
        .times
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| (*a - t_fix).abs().total_cmp(&(*b - t_fix).abs()))
        .map(|(i, _)| record.trace[i])
        .unwrap_or(f64::NAN);
    pairs.push(("trace".to_string(), trace));
    pairs
}

/// For epsilon sweeps, add the relative deviation of `E` from the
/// matching perfect-addressing (`epsilon = 0`) cell, so the summary can be
/// fed directly to a log-log exponent fit.
fn append_imperfection_deviation(
    names: &mut Vec<String>,
    rows: &mut [(CellKey, Vec<(String, f64)>)],
) {
    if !rows.iter().any(|(cell, _)| cell.epsilon != 0.0) {
        return;
    }
    let field = |values: &[(String, f64)]| {
        values.iter().find(|(n, _)| n == "E").map(|(_, v)| *v)
    };
    let references: Vec<(CellKey, f64)> = rows
        .iter()
        .filter(|(cell, _)| !cell.ideal && cell.epsilon == 0.0)
        .filter_map(|(cell, values)| field(values).map(|e| (cell.clone(), e)))
        .collect();
    for (cell, values) in rows.iter_mut() {
        let deviation = if cell.ideal {
            f64::NAN
        } else {
            references
                .iter()
                .find(|(r, _)| {
                    r.kappa == cell.kappa && r.size == cell.size && r.noise_config == cell.noise_config
                })
                .and_then(|(_, e_ref)| {
                    field(values).map(|e| ((e - e_ref) / e_ref).abs())
                })
                .unwrap_or(f64::NAN)
        };
        values.push(("E_dev".to_string(), deviation));
    }
    names.push("E_dev".to_string());
}

fn render_summary(names: &[String], rows: &[(CellKey, Vec<(String, f64)>)]) -> String {
    let mut out = String::from("cell,ideal,kappa,epsilon,size,noise_config");
    for name in names {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (cell, values) in rows {
        out.push_str(&cell.label());
        out.push_str(if cell.ideal { ",1" } else { ",0" });
        out.push_str(&format!(",{},{}", fmt(cell.kappa), fmt(cell.epsilon)));
        match cell.size {
            Some(n) => out.push_str(&format!(",{n}")),
            None => out.push(','),
        }
        match cell.noise_config {
            Some(crate::models::NoiseConfig::PerSite) => out.push_str(",per_site"),
            Some(crate::models::NoiseConfig::EvenOdd) => out.push_str(",even_odd"),
            None => out.push(','),
        }
        for name in names {
            out.push(',');
            let v = values
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, v)| *v)
                .unwrap_or(f64::NAN);
            out.push_str(&fmt(v));
        }
        out.push('\n');
    }
    out
}

/// 17 significant digits, enough to reproduce the f64 bit pattern.
fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn render_plot_script(config: &ExperimentConfig, files: &[(String, String)]) -> String {
    let mut cells_py = String::new();
    for (label, file) in files {
        cells_py.push_str(&format!("    (\"{label}\", \"{file}\"),\n"));
    }
    format!(
        r#"#!/usr/bin/env python3
"""Regenerate the figure panels for the `{preset}` run in this directory.

Requires matplotlib. Each observable column becomes one panel with every
sweep cell overlaid.
"""
import csv
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

CELLS = [
{cells_py}]

here = os.path.dirname(os.path.abspath(__file__))


def read_csv(path):
    with open(path, newline="") as handle:
        rows = list(csv.reader(handle))
    header, data = rows[0], rows[1:]
    columns = {{name: [float(r[i]) for r in data] for i, name in enumerate(header)}}
    return header, columns


def main():
    series = {{}}
    header = None
    for label, file in CELLS:
        header, columns = read_csv(os.path.join(here, file))
        series[label] = columns
    if header is None:
        sys.exit("no cell CSVs found")
    observables = [c for c in header if c != "t"]
    for obs in observables:
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        for label, columns in series.items():
            ax.plot(columns["t"], columns[obs], label=label, lw=1.2)
        ax.set_xlabel("t J")
        ax.set_ylabel(obs)
        ax.legend(fontsize=7, ncol=2)
        ax.set_title("{preset}: " + obs)
        fig.tight_layout()
        out = os.path.join(here, obs + ".png")
        fig.savefig(out, dpi=160)
        plt.close(fig)
        print("wrote", out)


if __name__ == "__main__":
    main()
"#,
        preset = config.preset.as_str(),
        cells_py = cells_py,
    )
}

fn write_manifest_atomically(path: &Path, manifest: &RunManifest) -> Result<()> {
    let bytes = serde_json::to_vec_pretty(manifest).expect("manifest serializes");
    let tmp: PathBuf = path.with_extension("json.tmp");
    fs::write(&tmp, &bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{preset_config, PresetName};

    fn tmp_dir(tag: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("zenolink_runner_{tag}_{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        dir
    }

    /// A trimmed u1_quench: tiny grid, two kappa cells plus baselines.
    fn small_u1_config(tag: &str) -> ExperimentConfig {
        let mut config = preset_config(PresetName::U1Quench);
        config.time_grid.t_end = 0.5;
        config.time_grid.points = 6;
        config.tol = 1e-7;
        config.sweep.kappa = vec![0.0, 1.0];
        config.output_dir = tmp_dir(tag);
        config
    }

    #[test]
    fn u1_cells_and_columns() {
        let config = small_u1_config("cols");
        let manifest = run_experiment(&config).unwrap();
        assert_eq!(manifest.failed_cells, 0);
        // ideal + kappa=0 + kappa=1
        assert_eq!(manifest.cells.len(), 3);

        let csv = fs::read_to_string(config.output_dir.join("kappa1.csv")).unwrap();
        let header = csv.lines().next().unwrap();
        assert_eq!(header, "t,g2,E,pop_P,E_cond,trace");
        assert_eq!(csv.lines().count(), 1 + 6);

        let summary = fs::read_to_string(config.output_dir.join("summary.csv")).unwrap();
        assert!(summary.lines().next().unwrap().starts_with("cell,ideal,kappa,epsilon,size,noise_config,g2,E,pop_P"));
        assert_eq!(summary.lines().count(), 1 + 3);

        assert!(config.output_dir.join("plot.py").exists());
        assert!(config.output_dir.join("manifest.json").exists());
        let _ = fs::remove_dir_all(&config.output_dir);
    }

    #[test]
    fn reruns_are_byte_identical() {
        let config = small_u1_config("det");
        run_experiment(&config).unwrap();
        let first = fs::read(config.output_dir.join("kappa1.csv")).unwrap();
        let first_summary = fs::read(config.output_dir.join("summary.csv")).unwrap();
        run_experiment(&config).unwrap();
        let second = fs::read(config.output_dir.join("kappa1.csv")).unwrap();
        let second_summary = fs::read(config.output_dir.join("summary.csv")).unwrap();
        assert_eq!(first, second);
        assert_eq!(first_summary, second_summary);
        let _ = fs::remove_dir_all(&config.output_dir);
    }

    #[test]
    fn trajectory_backend_deterministic_across_worker_counts() {
        let mut config = small_u1_config("traj");
        config.backend = BackendKind::Trajectory;
        config.trajectories = 48;
        config.sweep.kappa = vec![2.0];
        config.sweep.include_ideal = false;

        config.workers = 1;
        run_experiment(&config).unwrap();
        let one = fs::read(config.output_dir.join("kappa2.csv")).unwrap();
        config.workers = 2;
        run_experiment(&config).unwrap();
        let two = fs::read(config.output_dir.join("kappa2.csv")).unwrap();
        assert_eq!(one, two);
        let header = String::from_utf8(one).unwrap();
        assert!(header.lines().next().unwrap().ends_with(",norm"));
        let _ = fs::remove_dir_all(&config.output_dir);
    }

    #[test]
    fn failed_cell_is_isolated() {
        let mut config = small_u1_config("fail");
        config.backend = BackendKind::Trajectory;
        config.sweep.include_ideal = false;
        config.sweep.kappa = vec![0.5, 2.0];
        config.trajectories = 4;
        config.dt = 0.049; // passes the stability bound for kappa=0.5 only
        let manifest = run_experiment(&config).unwrap();
        assert_eq!(manifest.failed_cells, 1);
        let ok: Vec<_> = manifest.cells.iter().filter(|c| c.status == "ok").collect();
        assert_eq!(ok.len(), 1);
        assert!(config.output_dir.join("kappa0p5.csv").exists());
        assert!(!config.output_dir.join("kappa2.csv").exists());
        let _ = fs::remove_dir_all(&config.output_dir);
    }

    #[test]
    fn epsilon_sweep_emits_deviation_column() {
        let mut config = small_u1_config("eps");
        config.sweep.kappa = vec![5.0];
        config.sweep.include_ideal = false;
        config.sweep.epsilon = vec![0.05, 0.1];
        config.t_fix = 0.5;
        let manifest = run_experiment(&config).unwrap();
        assert_eq!(manifest.failed_cells, 0);
        let summary = fs::read_to_string(config.output_dir.join("summary.csv")).unwrap();
        let header = summary.lines().next().unwrap();
        assert!(header.ends_with(",E_dev"), "header: {header}");
        // the epsilon = 0 reference row carries zero deviation
        let rows: Vec<&str> = summary.lines().skip(1).collect();
        assert_eq!(rows.len(), 3);
        let ref_row: Vec<&str> = rows[0].split(',').collect();
        assert_eq!(ref_row[0], "kappa5");
        assert_eq!(ref_row.last().unwrap().parse::<f64>().unwrap(), 0.0);
        let dev_row: Vec<&str> = rows[2].split(',').collect();
        assert!(dev_row.last().unwrap().parse::<f64>().unwrap() > 0.0);
        let _ = fs::remove_dir_all(&config.output_dir);
    }

    #[test]
    fn spin_size_scan_labels() {
        let mut config = preset_config(PresetName::SpinSizeScan);
        config.time_grid = crate::experiments::GridConfig { t_start: 0.0, t_end: 0.2, points: 3 };
        config.tol = 1e-6;
        config.sweep.kappa = vec![0.0];
        config.sweep.sizes = vec![2, 3];
        config.output_dir = tmp_dir("spin");
        let manifest = run_experiment(&config).unwrap();
        assert_eq!(manifest.failed_cells, 0);
        assert!(config.output_dir.join("kappa0_N2_per_site.csv").exists());
        assert!(config.output_dir.join("kappa0_N3_even_odd.csv").exists());
        let csv = fs::read_to_string(config.output_dir.join("kappa0_N2_per_site.csv")).unwrap();
        assert_eq!(csv.lines().next().unwrap(), "t,g2,M,pop_P,trace");
        let _ = fs::remove_dir_all(&config.output_dir);
    }
}
