//! Config-driven experiment runner.
//!
//! An [`ExperimentConfig`] describes one sweep: a model, a backend, the
//! noise strengths and other swept parameters, a time grid, and an output
//! directory. [`runner::run_experiment`] evaluates every sweep cell (in
//! parallel, deterministically), writes one CSV per cell plus a combined
//! summary CSV and a plot script, and finishes with an atomically written
//! manifest. Identical `(config, seed)` pairs produce byte-identical CSVs
//! at any worker count.
//!
//! Configs are TOML with strict unknown-key rejection; a typo in a physics
//! parameter fails the run before anything executes.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{NoiseConfig, SpinChainParams, U1Params, U2Params};

pub mod fit;
pub mod runner;

pub use fit::{fit_scaling, FitResult};
pub use runner::run_experiment;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetName {
    U1Quench,
    U1KappaScan,
    U1ImperfectionScan,
    U2Blocks,
    SpinProtection,
    SpinSizeScan,
    Custom,
}

impl PresetName {
    pub const ALL: [PresetName; 6] = [
        PresetName::U1Quench,
        PresetName::U1KappaScan,
        PresetName::U1ImperfectionScan,
        PresetName::U2Blocks,
        PresetName::SpinProtection,
        PresetName::SpinSizeScan,
    ];

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "u1_quench" => Ok(Self::U1Quench),
            "u1_kappa_scan" => Ok(Self::U1KappaScan),
            "u1_imperfection_scan" => Ok(Self::U1ImperfectionScan),
            "u2_blocks" => Ok(Self::U2Blocks),
            "spin_protection" => Ok(Self::SpinProtection),
            "spin_size_scan" => Ok(Self::SpinSizeScan),
            "custom" => Ok(Self::Custom),
            other => Err(Error::Config(format!("unknown preset `{other}`"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::U1Quench => "u1_quench",
            Self::U1KappaScan => "u1_kappa_scan",
            Self::U1ImperfectionScan => "u1_imperfection_scan",
            Self::U2Blocks => "u2_blocks",
            Self::SpinProtection => "spin_protection",
            Self::SpinSizeScan => "spin_size_scan",
            Self::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Lindblad,
    Trajectory,
    Projected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub t_start: f64,
    pub t_end: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelConfig {
    U1(U1Params),
    U2(U2Params),
    SpinChain(SpinChainParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Noise strengths; one cell per value.
    pub kappa: Vec<f64>,
    /// Imperfect-addressing strengths (Lindblad backend, U(1) model). A
    /// perfect `epsilon = 0` reference cell is added automatically when
    /// non-empty.
    pub epsilon: Vec<f64>,
    /// Onsite-loss rate applied to every cell (Lindblad, U(1)); 0 = off.
    pub gamma0: f64,
    /// Add a constraint-respecting baseline cell (`H1 = 0`, `kappa = 0`).
    pub include_ideal: bool,
    /// Spin-chain ring sizes; empty = just the model's `n_spins`.
    pub sizes: Vec<u32>,
    /// Spin-chain noise configurations; empty = the model's own.
    pub noise_configs: Vec<NoiseConfig>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            kappa: vec![0.0],
            epsilon: Vec::new(),
            gamma0: 0.0,
            include_ideal: false,
            sizes: Vec::new(),
            noise_configs: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub preset: PresetName,
    pub backend: BackendKind,
    /// Trajectory count (trajectory backend).
    #[serde(default = "default_trajectories")]
    pub trajectories: usize,
    /// Trajectory step; 0 selects the stability default.
    #[serde(default)]
    pub dt: f64,
    pub seed: u64,
    /// Worker threads; 0 defers to `ZENOLINK_WORKERS`, then to all cores.
    #[serde(default)]
    pub workers: usize,
    pub output_dir: PathBuf,
    pub tol: f64,
    /// Time at which summary values are extracted.
    #[serde(default = "default_t_fix")]
    pub t_fix: f64,
    pub time_grid: GridConfig,
    pub model: ModelConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
}

fn default_trajectories() -> usize {
    1000
}

fn default_t_fix() -> f64 {
    5.0
}

impl ExperimentConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tol <= 0.0 {
            return Err(Error::Config("tol must be positive".into()));
        }
        if self.time_grid.points < 2 || self.time_grid.t_end <= self.time_grid.t_start {
            return Err(Error::Config("time_grid needs t_end > t_start and >= 2 points".into()));
        }
        if self.sweep.kappa.is_empty() {
            return Err(Error::Config("sweep.kappa must list at least one value".into()));
        }
        if self.sweep.kappa.iter().any(|&k| k < 0.0) {
            return Err(Error::Config("kappa values must be >= 0".into()));
        }
        if self.backend == BackendKind::Trajectory && self.trajectories == 0 {
            return Err(Error::Config("trajectory backend needs trajectories >= 1".into()));
        }
        let is_u1 = matches!(self.model, ModelConfig::U1(_));
        if (!self.sweep.epsilon.is_empty() || self.sweep.gamma0 != 0.0)
            && (self.backend != BackendKind::Lindblad || !is_u1)
        {
            return Err(Error::Config(
                "epsilon scans and onsite loss are defined for the Lindblad backend on the U(1) model".into(),
            ));
        }
        if (!self.sweep.sizes.is_empty() || !self.sweep.noise_configs.is_empty())
            && !matches!(self.model, ModelConfig::SpinChain(_))
        {
            return Err(Error::Config("sizes/noise_configs sweeps apply to the spin chain".into()));
        }
        if self.backend == BackendKind::Projected && self.sweep.kappa.contains(&0.0) {
            return Err(Error::Config("the projected backend needs kappa > 0".into()));
        }
        Ok(())
    }

    /// Worker count after applying the environment default.
    pub fn effective_workers(&self) -> usize {
        if self.workers > 0 {
            return self.workers;
        }
        std::env::var("ZENOLINK_WORKERS")
            .ok()
            .and_then(|v| v.parse().ok())
            .filter(|&n| n > 0)
            .unwrap_or(0)
    }
}

/// Built-in preset configurations (the reference parameter sets).
pub fn preset_config(name: PresetName) -> ExperimentConfig {
    let base_u1 = ModelConfig::U1(U1Params::default());
    match name {
        PresetName::U1Quench => ExperimentConfig {
            preset: name,
            backend: BackendKind::Lindblad,
            trajectories: default_trajectories(),
            dt: 0.0,
            seed: 7,
            workers: 0,
            output_dir: PathBuf::from("runs/u1_quench"),
            tol: 1e-9,
            t_fix: 5.0,
            time_grid: GridConfig { t_start: 0.0, t_end: 10.0, points: 201 },
            model: base_u1,
            sweep: SweepConfig {
                kappa: vec![0.0, 1.0, 2.5, 5.0, 10.0, 20.0, 40.0, 80.0],
                include_ideal: true,
                ..Default::default()
            },
        },
        PresetName::U1KappaScan => ExperimentConfig {
            preset: name,
            output_dir: PathBuf::from("runs/u1_kappa_scan"),
            sweep: SweepConfig {
                kappa: vec![1.0, 2.5, 5.0, 10.0, 20.0, 40.0, 80.0],
                include_ideal: true,
                ..Default::default()
            },
            ..preset_config(PresetName::U1Quench)
        },
        PresetName::U1ImperfectionScan => ExperimentConfig {
            preset: name,
            output_dir: PathBuf::from("runs/u1_imperfection_scan"),
            sweep: SweepConfig {
                kappa: vec![10.0],
                epsilon: vec![0.0125, 0.025, 0.05, 0.1],
                include_ideal: false,
                ..Default::default()
            },
            ..preset_config(PresetName::U1Quench)
        },
        PresetName::U2Blocks => ExperimentConfig {
            preset: name,
            backend: BackendKind::Lindblad,
            trajectories: default_trajectories(),
            dt: 0.0,
            seed: 7,
            workers: 0,
            output_dir: PathBuf::from("runs/u2_blocks"),
            tol: 1e-8,
            t_fix: 3.0,
            time_grid: GridConfig { t_start: 0.0, t_end: 5.0, points: 101 },
            model: ModelConfig::U2(U2Params::default()),
            sweep: SweepConfig {
                kappa: vec![0.0, 5.0, 10.0, 20.0, 40.0, 80.0, 160.0],
                include_ideal: true,
                ..Default::default()
            },
        },
        PresetName::SpinProtection => ExperimentConfig {
            preset: name,
            backend: BackendKind::Lindblad,
            trajectories: default_trajectories(),
            dt: 0.0,
            seed: 7,
            workers: 0,
            output_dir: PathBuf::from("runs/spin_protection"),
            tol: 1e-8,
            t_fix: 4.0,
            time_grid: GridConfig { t_start: 0.0, t_end: 10.0, points: 201 },
            model: ModelConfig::SpinChain(SpinChainParams::default()),
            sweep: SweepConfig {
                kappa: vec![0.0, 5.0, 10.0, 20.0, 40.0, 60.0],
                ..Default::default()
            },
        },
        PresetName::SpinSizeScan => ExperimentConfig {
            preset: name,
            output_dir: PathBuf::from("runs/spin_size_scan"),
            time_grid: GridConfig { t_start: 0.0, t_end: 4.0, points: 81 },
            sweep: SweepConfig {
                kappa: vec![0.0, 40.0, 60.0],
                sizes: vec![4, 6, 8, 10],
                noise_configs: vec![NoiseConfig::PerSite, NoiseConfig::EvenOdd],
                ..Default::default()
            },
            ..preset_config(PresetName::SpinProtection)
        },
        PresetName::Custom => ExperimentConfig {
            preset: name,
            backend: BackendKind::Lindblad,
            trajectories: default_trajectories(),
            dt: 0.0,
            seed: 7,
            workers: 0,
            output_dir: PathBuf::from("runs/custom"),
            tol: 1e-9,
            t_fix: 5.0,
            time_grid: GridConfig { t_start: 0.0, t_end: 10.0, points: 201 },
            model: ModelConfig::U1(U1Params::default()),
            sweep: SweepConfig::default(),
        },
    }
}

/// One sweep cell: the parameter combination of a single run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellKey {
    /// Baseline cell evolving the constraint-respecting model alone.
    pub ideal: bool,
    pub kappa: f64,
    pub epsilon: f64,
    pub size: Option<u32>,
    pub noise_config: Option<NoiseConfig>,
}

impl CellKey {
    /// Deterministic, filesystem-safe label.
    pub fn label(&self) -> String {
        if self.ideal {
            return "ideal".to_string();
        }
        let mut parts = vec![format!("kappa{}", fmt_num(self.kappa))];
        if self.epsilon != 0.0 {
            parts.push(format!("eps{}", fmt_num(self.epsilon)));
        }
        if let Some(n) = self.size {
            parts.push(format!("N{n}"));
        }
        if let Some(cfg) = self.noise_config {
            parts.push(
                match cfg {
                    NoiseConfig::PerSite => "per_site",
                    NoiseConfig::EvenOdd => "even_odd",
                }
                .to_string(),
            );
        }
        parts.join("_")
    }
}

fn fmt_num(v: f64) -> String {
    let s = format!("{v}");
    s.replace('.', "p").replace('-', "m")
}

/// Enumerate the sweep cells of a config in deterministic order.
pub fn enumerate_cells(config: &ExperimentConfig) -> Vec<CellKey> {
    let mut cells = Vec::new();
    if config.sweep.include_ideal {
        cells.push(CellKey { ideal: true, kappa: 0.0, epsilon: 0.0, size: None, noise_config: None });
    }
    let sizes: Vec<Option<u32>> = if config.sweep.sizes.is_empty() {
        vec![None]
    } else {
        config.sweep.sizes.iter().map(|&n| Some(n)).collect()
    };
    let noise_configs: Vec<Option<NoiseConfig>> = if config.sweep.noise_configs.is_empty() {
        vec![None]
    } else {
        config.sweep.noise_configs.iter().map(|&c| Some(c)).collect()
    };
    let mut epsilons = vec![0.0];
    epsilons.extend(config.sweep.epsilon.iter().copied().filter(|&e| e != 0.0));

    for &size in &sizes {
        for &noise_config in &noise_configs {
            for &kappa in &config.sweep.kappa {
                for &epsilon in &epsilons {
                    cells.push(CellKey { ideal: false, kappa, epsilon, size, noise_config });
                }
            }
        }
    }
    cells
}

/// FNV-1a 64-bit hash, used for config hashes and output checksums.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestFile {
    pub path: String,
    pub checksum: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestCell {
    pub label: String,
    pub seed: u64,
    pub status: String,
    pub wall_ms: u128,
}

/// Written atomically after a run; records what was produced and from what.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub code_version: String,
    pub seed: u64,
    pub cells: Vec<ManifestCell>,
    pub outputs: Vec<ManifestFile>,
    pub wall_clock_ms: u128,
    pub failed_cells: usize,
}

/// Model variant evolving `H0` alone (the constraint-respecting baseline).
pub(crate) fn ideal_model(model: &ModelConfig) -> ModelConfig {
    match model {
        ModelConfig::U1(p) => ModelConfig::U1(U1Params { lambda: 0.0, ..p.clone() }),
        ModelConfig::U2(p) => {
            let mut couplings: BTreeMap<String, f64> =
                [("j11".to_string(), 1.0), ("j12".to_string(), 1.0)].into_iter().collect();
            // keep explicit zeros out; absent keys contribute nothing
            couplings.retain(|_, v| *v != 0.0);
            ModelConfig::U2(U2Params { couplings, ..p.clone() })
        }
        ModelConfig::SpinChain(p) => {
            ModelConfig::SpinChain(SpinChainParams { delta: 0.0, jx: 0.0, ..p.clone() })
        }
    }
}

/// Apply a cell's size/noise-config overrides to the model section.
pub(crate) fn cell_model(model: &ModelConfig, cell: &CellKey) -> ModelConfig {
    let mut model = if cell.ideal { ideal_model(model) } else { model.clone() };
    if let ModelConfig::SpinChain(p) = &mut model {
        if let Some(n) = cell.size {
            p.n_spins = n;
        }
        if let Some(cfg) = cell.noise_config {
            p.noise_config = cfg;
        }
    }
    model
}

pub(crate) fn build_model(model: &ModelConfig) -> Result<crate::models::ModelBundle> {
    match model {
        ModelConfig::U1(p) => crate::models::build_u1_model(p),
        ModelConfig::U2(p) => crate::models::build_u2_model(p),
        ModelConfig::SpinChain(p) => crate::models::build_spin_chain_model(p),
    }
}

/// A model's reference initial state for quench experiments.
pub(crate) fn initial_state(bundle: &crate::models::ModelBundle) -> Result<crate::sparse::StateVector> {
    use crate::models::ModelKind;
    match bundle.kind {
        ModelKind::U1(_) => crate::models::u1::initial_quench_state(bundle),
        ModelKind::U2(_) => crate::models::u2::singlet_initial_state(bundle),
        ModelKind::SpinChain(_) => crate::models::spin_chain::ferromagnet_state(bundle),
        ModelKind::Custom(_) => {
            Err(Error::InvalidParameter("custom bundles have no canonical initial state".into()))
        }
    }
}
