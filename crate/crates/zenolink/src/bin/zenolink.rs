//! Experiment CLI.
//!
//! ```text
//! zenolink run <config.toml>        # execute a sweep described by a config file
//! zenolink preset <name> [--print-config]
//! zenolink fit <summary.csv> --x kappa --y g2 --loglog
//! ```
//!
//! Exit codes: 0 success, 2 invalid config or arguments, 3 numeric failure
//! in at least one sweep cell (the remaining cells still complete).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use zenolink::experiments::{
    fit::read_csv_columns, fit_scaling, preset_config, run_experiment, ExperimentConfig, PresetName,
};

#[derive(Parser)]
#[command(name = "zenolink", version, about = "Constrained quantum dynamics under engineered noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config file.
    Run {
        config: PathBuf,
    },
    /// Show a built-in preset configuration (TOML on stdout).
    Preset {
        /// One of: u1_quench, u1_kappa_scan, u1_imperfection_scan,
        /// u2_blocks, spin_protection, spin_size_scan, custom.
        name: String,
        /// Print the full config (default behavior, kept for scripting).
        #[arg(long)]
        print_config: bool,
    },
    /// Least-squares fit of one summary column against another.
    Fit {
        summary: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        /// Fit in log-log space (power-law exponent); rows with
        /// non-positive values are skipped.
        #[arg(long)]
        loglog: bool,
    },
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { config } => run(config),
        Command::Preset { name, print_config: _ } => preset(&name),
        Command::Fit { summary, x, y, loglog } => fit(summary, &x, &y, loglog),
    }
}

fn run(path: PathBuf) -> ExitCode {
    let text = match std::fs::read_to_string(&path) {
        Ok(text) => text,
        Err(err) => {
            eprintln!("error: cannot read {}: {err}", path.display());
            return ExitCode::from(2);
        }
    };
    let config = match ExperimentConfig::from_toml(&text) {
        Ok(config) => config,
        Err(err) => {
            eprintln!("error: invalid config {}: {err}", path.display());
            return ExitCode::from(2);
        }
    };
    match run_experiment(&config) {
        Ok(manifest) => {
            for cell in &manifest.cells {
                println!("{:<40} {:>8} ms  {}", cell.label, cell.wall_ms, cell.status);
            }
            println!(
                "wrote {} files to {} in {} ms",
                manifest.outputs.len(),
                config.output_dir.display(),
                manifest.wall_clock_ms
            );
            if manifest.failed_cells > 0 {
                eprintln!("error: {} cell(s) failed; see manifest.json", manifest.failed_cells);
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

fn preset(name: &str) -> ExitCode {
    match PresetName::parse(name) {
        Ok(preset) => {
            print!("{}", preset_config(preset).to_toml());
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            eprintln!(
                "available presets: u1_quench, u1_kappa_scan, u1_imperfection_scan, u2_blocks, spin_protection, spin_size_scan, custom"
            );
            ExitCode::from(2)
        }
    }
}

fn fit(summary: PathBuf, x: &str, y: &str, loglog: bool) -> ExitCode {
    let result = read_csv_columns(&summary, x, y).and_then(|(xs, ys)| {
        let (xs, ys): (Vec<f64>, Vec<f64>) = if loglog {
            xs.into_iter().zip(ys).filter(|&(a, b)| a > 0.0 && b > 0.0).unzip()
        } else {
            (xs, ys)
        };
        fit_scaling(&xs, &ys, loglog)
    });
    match result {
        Ok(fit) => {
            println!(
                "slope = {:.6}  intercept = {:.6}  stderr = {:.3e}  r2 = {:.6}",
                fit.slope, fit.intercept, fit.stderr, fit.r_squared
            );
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}
