//! Time-evolution backends.
//!
//! Three interchangeable routes with a common record format:
//!
//! - [`lindblad::integrate_lindblad`]: the noise-averaged master equation,
//!   `drho/dt = -i[H, rho] + kappa sum_G D[G] rho + sum_extra gamma D[L] rho`
//!   with `D[L] rho = 2 L rho L^dag - L^dag L rho - rho L^dag L`, integrated
//!   by adaptive Runge-Kutta on the dense density matrix.
//! - [`trajectory`]: single stochastic realizations of the noisy
//!   Hamiltonian and their ensemble averages. Each step applies the exact
//!   unitary `exp(-i [H dt + sqrt(2 kappa) sum_a dW_a G_a])`, which keeps
//!   the norm and realizes the Stratonovich reading of the noise; averaging
//!   converges to the master equation.
//! - [`projected::projected_evolution`]: strong-noise effective evolution
//!   restricted to the protected subspace under the non-Hermitian
//!   `H~ = P H P - i P H1 Q [kappa sum G^2]^{-1}_QQ Q H1 P`, whose decaying
//!   trace tracks the population loss to the complement.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::models::ModelBundle;
use crate::sparse::C64;

pub mod expm;
pub mod lindblad;
pub mod ou;
pub mod projected;
pub mod rk45;
pub mod rng;
pub mod trajectory;

pub use lindblad::{integrate_lindblad, integrate_lindblad_with, LindbladOptions};
pub use ou::ou_path;
pub use projected::{projected_evolution, projected_evolution_with};
pub use trajectory::{run_trajectory, run_trajectory_ensemble, EnsembleOptions};

/// Output time grid (in units of inverse energy).
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub points: Vec<f64>,
}

impl TimeGrid {
    /// `n_points` uniformly spaced outputs covering `[t_start, t_end]`,
    /// endpoints included.
    pub fn uniform(t_start: f64, t_end: f64, n_points: usize) -> Result<Self> {
        if t_end.partial_cmp(&t_start) != Some(std::cmp::Ordering::Greater) || n_points < 2 {
            return Err(Error::InvalidParameter(format!(
                "time grid needs t_end > t_start and >= 2 points (got [{t_start}, {t_end}], {n_points})"
            )));
        }
        let step = (t_end - t_start) / (n_points - 1) as f64;
        let points = (0..n_points).map(|k| t_start + step * k as f64).collect();
        Ok(Self { t_start, t_end, points })
    }

    pub fn from_points(t_start: f64, t_end: f64, points: Vec<f64>) -> Result<Self> {
        let ok = !points.is_empty()
            && points.windows(2).all(|w| w[1] > w[0])
            && t_start <= points[0]
            && *points.last().unwrap() <= t_end;
        if !ok {
            return Err(Error::InvalidParameter(
                "output points must be strictly increasing within [t_start, t_end]".into(),
            ));
        }
        Ok(Self { t_start, t_end, points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Classical noise driving the generators in the trajectory backend.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseKind {
    /// Ideal white noise of strength `kappa`.
    White,
    /// Mean-reverting colored noise; acts as white noise of strength
    /// `D / (2 gamma^2)` when `gamma` dominates all other rates.
    OrnsteinUhlenbeck { gamma: f64, diffusion: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    /// White-noise strength; ignored for Ornstein-Uhlenbeck noise, where
    /// the effective strength is fixed by `gamma` and `diffusion`.
    pub kappa: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn white(kappa: f64, seed: u64) -> Self {
        Self { kind: NoiseKind::White, kappa, seed }
    }

    pub fn ornstein_uhlenbeck(gamma: f64, diffusion: f64, seed: u64) -> Self {
        Self { kind: NoiseKind::OrnsteinUhlenbeck { gamma, diffusion }, kappa: 0.0, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kappa < 0.0 {
            return Err(Error::InvalidParameter(format!("kappa = {} must be >= 0", self.kappa)));
        }
        if let NoiseKind::OrnsteinUhlenbeck { gamma, diffusion } = self.kind {
            if gamma <= 0.0 || diffusion < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "OU noise needs gamma > 0 and D >= 0 (got gamma={gamma}, D={diffusion})"
                )));
            }
        }
        Ok(())
    }

    /// White-noise strength the averaged master equation sees.
    pub fn effective_kappa(&self) -> f64 {
        match self.kind {
            NoiseKind::White => self.kappa,
            NoiseKind::OrnsteinUhlenbeck { gamma, diffusion } => diffusion / (2.0 * gamma * gamma),
        }
    }

    /// Fastest rate the stepper must resolve.
    fn rate_scale(&self) -> f64 {
        match self.kind {
            NoiseKind::White => self.kappa,
            NoiseKind::OrnsteinUhlenbeck { gamma, .. } => gamma,
        }
    }
}

/// Default trajectory step, `0.01 / max(kappa, couplings, 1)`.
pub fn default_trajectory_dt(bundle: &ModelBundle, noise: &NoiseSpec) -> f64 {
    0.01 / bundle.energy_scale.max(noise.rate_scale()).max(1.0)
}

/// Largest admissible trajectory step, `0.05 / max(kappa, couplings)`.
pub fn max_trajectory_dt(bundle: &ModelBundle, noise: &NoiseSpec) -> f64 {
    0.05 / bundle.energy_scale.max(noise.rate_scale()).max(1e-12)
}

/// Numerical health counters carried by every record.
#[derive(Debug, Clone, Copy, Default)]
pub struct Diagnostics {
    /// Max over grid points of `||rho - rho^dag||_max` (Lindblad/projected).
    pub max_hermiticity_violation: f64,
    /// Min over grid points of the smallest diagonal entry of `rho`
    /// (a cheap positivity proxy).
    pub min_eigenvalue_proxy: f64,
    pub steps: usize,
    pub rhs_evals: usize,
    pub max_step_error: f64,
    /// Max cumulative norm drift over trajectory realizations.
    pub max_norm_drift: f64,
}

/// What the `trace` series of a record means.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    /// `tr rho` of a master-equation solution (drift is a diagnostic).
    DensityTrace,
    /// `tr rho_PP` of the projected evolution (decays monotonically).
    ProjectedTrace,
    /// Mean squared norm of trajectory realizations.
    EnsembleNorm,
}

/// Time series produced by one evolution run.
#[derive(Debug, Clone)]
pub struct EvolutionRecord {
    pub times: Vec<f64>,
    /// Observable names in recording order (CSV column order).
    pub names: Vec<String>,
    /// Named real observable series, each of the grid's length.
    pub series: BTreeMap<String, Vec<f64>>,
    pub trace: Vec<f64>,
    pub trace_kind: TraceKind,
    /// Density-matrix snapshots at requested grid times.
    pub snapshots: Vec<(f64, DMatrix<C64>)>,
    pub diagnostics: Diagnostics,
}

impl EvolutionRecord {
    pub(crate) fn new(times: Vec<f64>, names: &[String], trace_kind: TraceKind) -> Self {
        let series = names.iter().map(|n| (n.clone(), Vec::with_capacity(times.len()))).collect();
        Self {
            times,
            names: names.to_vec(),
            series,
            trace: Vec::new(),
            trace_kind,
            snapshots: Vec::new(),
            diagnostics: Diagnostics { min_eigenvalue_proxy: f64::INFINITY, ..Default::default() },
        }
    }

    pub(crate) fn push_values(&mut self, names: &[String], values: &[f64]) {
        for (name, &v) in names.iter().zip(values) {
            self.series.get_mut(name).expect("series registered").push(v);
        }
    }

    pub fn series_by_name(&self, name: &str) -> Option<&[f64]> {
        self.series.get(name).map(|v| v.as_slice())
    }

    /// Value of a named series at the grid point closest to `t`.
    pub fn value_at(&self, name: &str, t: f64) -> Option<f64> {
        let series = self.series.get(name)?;
        let idx = self
            .times
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| (*a - t).abs().total_cmp(&(*b - t).abs()))?
            .0;
        series.get(idx).copied()
    }

    pub(crate) fn check_lengths(&self) {
        for (name, s) in &self.series {
            assert_eq!(s.len(), self.times.len(), "series {name} length mismatch");
        }
        assert_eq!(self.trace.len(), self.times.len());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_grid_endpoints() {
        let g = TimeGrid::uniform(0.0, 10.0, 201).unwrap();
        assert_eq!(g.len(), 201);
        assert_eq!(g.points[0], 0.0);
        assert_eq!(*g.points.last().unwrap(), 10.0);
        assert!(TimeGrid::uniform(1.0, 1.0, 10).is_err());
        assert!(TimeGrid::from_points(0.0, 1.0, vec![0.5, 0.4]).is_err());
    }

    #[test]
    fn ou_effective_kappa() {
        let spec = NoiseSpec::ornstein_uhlenbeck(10.0, 40.0, 1);
        assert!((spec.effective_kappa() - 0.2).abs() < 1e-15);
        assert_eq!(NoiseSpec::white(3.0, 0).effective_kappa(), 3.0);
    }
}
