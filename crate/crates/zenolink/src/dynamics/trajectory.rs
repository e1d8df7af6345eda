//! Stochastic-noise trajectories.
//!
//! One realization evolves a pure state by the exact step unitary
//!
//! ```text
//! |psi> <- exp( -i [ H dt + sum_a c_a(dt) G_a ] ) |psi>
//! ```
//!
//! with `c_a = sqrt(2 kappa) dW_a` for white noise (independent Wiener
//! increments per channel) or `c_a = xi_a dt` for Ornstein-Uhlenbeck noise
//! sampled by its exact discretization. Exponentiating the whole stochastic
//! increment keeps the norm to round-off and realizes the Stratonovich
//! reading of the multiplicative noise, so ensemble averages converge to
//! the master equation without higher-order SDE schemes.
//!
//! Wiener increments come from a counter RNG keyed by
//! `(trajectory, channel, step)`: ensembles are bitwise reproducible for
//! any worker count, and blocks are reduced in fixed order.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::ModelBundle;
use crate::observables::{default_observables, ObservableSet};
use crate::sparse::{SparseOperator, StateVector, C64};

use super::expm::expv_hermitian;
use super::lindblad::resolve_snapshot_indices;
use super::ou::OuUpdate;
use super::rng::{kind, CounterRng};
use super::{
    default_trajectory_dt, max_trajectory_dt, Diagnostics, EvolutionRecord, NoiseKind, NoiseSpec,
    TimeGrid, TraceKind,
};

/// Trajectories per reduction block; block sums are combined in index
/// order, independent of scheduling.
const BLOCK: usize = 32;

#[derive(Debug, Clone)]
pub struct EnsembleOptions {
    pub n_trajectories: usize,
    /// Step size; `None` uses [`default_trajectory_dt`].
    pub dt: Option<f64>,
    pub observables: Option<ObservableSet>,
    /// Grid times at which to accumulate the averaged density matrix.
    pub snapshot_times: Vec<f64>,
}

impl EnsembleOptions {
    pub fn new(n_trajectories: usize) -> Self {
        Self { n_trajectories, dt: None, observables: None, snapshot_times: Vec::new() }
    }
}

/// Evolve a single noise realization (trajectory index 0) and record the
/// bundle's observables plus the state norm on the grid.
pub fn run_trajectory(
    bundle: &ModelBundle,
    noise: &NoiseSpec,
    psi0: &StateVector,
    grid: &TimeGrid,
    dt: f64,
) -> Result<EvolutionRecord> {
    let observables = default_observables(bundle)?;
    let engine = StepEngine::new(bundle, noise, dt, grid)?;
    check_state(bundle, psi0)?;
    let names = observables.names();
    let mut record = EvolutionRecord::new(grid.points.clone(), &names, TraceKind::EnsembleNorm);
    let out = engine.evolve_one(psi0, 0, &observables, &[])?;
    for values in out.series {
        record.push_values(&names, &values);
    }
    record.trace = out.norms_sq;
    record.diagnostics =
        Diagnostics { max_norm_drift: out.max_drift, min_eigenvalue_proxy: 0.0, ..Default::default() };
    record.check_lengths();
    Ok(record)
}

/// Average `n_trajectories` realizations. Observable series are ensemble
/// means; snapshots hold the averaged density matrix at the requested
/// times.
pub fn run_trajectory_ensemble(
    bundle: &ModelBundle,
    noise: &NoiseSpec,
    psi0: &StateVector,
    grid: &TimeGrid,
    opts: &EnsembleOptions,
) -> Result<EvolutionRecord> {
    if opts.n_trajectories == 0 {
        return Err(Error::InvalidParameter("need at least one trajectory".into()));
    }
    let observables = match &opts.observables {
        Some(set) => set.clone(),
        None => default_observables(bundle)?,
    };
    let dt = opts.dt.unwrap_or_else(|| default_trajectory_dt(bundle, noise));
    let engine = StepEngine::new(bundle, noise, dt, grid)?;
    check_state(bundle, psi0)?;

    let snapshot_indices = resolve_snapshot_indices(&opts.snapshot_times, grid)?;
    let names = observables.names();
    let n_blocks = opts.n_trajectories.div_ceil(BLOCK);

    let block_sums: Vec<BlockSum> = (0..n_blocks)
        .into_par_iter()
        .map(|block| {
            let lo = block * BLOCK;
            let hi = ((block + 1) * BLOCK).min(opts.n_trajectories);
            let mut acc = BlockSum::zero(names.len(), grid.len(), snapshot_indices.len(), bundle.dim());
            for traj in lo..hi {
                let out = engine.evolve_one(psi0, traj as u64, &observables, &snapshot_indices)?;
                acc.add(&out);
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;

    // Fixed-order reduction: bitwise independent of the worker count.
    let mut total = BlockSum::zero(names.len(), grid.len(), snapshot_indices.len(), bundle.dim());
    for b in &block_sums {
        total.merge(b);
    }

    let m = opts.n_trajectories as f64;
    let mut record = EvolutionRecord::new(grid.points.clone(), &names, TraceKind::EnsembleNorm);
    for t_idx in 0..grid.len() {
        let values: Vec<f64> = (0..names.len()).map(|o| total.series[o][t_idx] / m).collect();
        record.push_values(&names, &values);
    }
    record.trace = total.norms_sq.iter().map(|v| v / m).collect();
    for (&grid_idx, rho_sum) in snapshot_indices.iter().zip(total.snapshots) {
        record.snapshots.push((grid.points[grid_idx], rho_sum / C64::new(m, 0.0)));
    }
    record.diagnostics = Diagnostics {
        max_norm_drift: total.max_drift,
        min_eigenvalue_proxy: 0.0,
        steps: total.steps,
        ..Default::default()
    };
    record.check_lengths();
    Ok(record)
}

fn check_state(bundle: &ModelBundle, psi0: &StateVector) -> Result<()> {
    if psi0.dim() != bundle.dim() {
        return Err(Error::DimensionMismatch { op: bundle.dim(), state: psi0.dim() });
    }
    if (psi0.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!("|psi0| = {} must be 1", psi0.norm())));
    }
    Ok(())
}

struct BlockSum {
    series: Vec<Vec<f64>>,
    norms_sq: Vec<f64>,
    snapshots: Vec<DMatrix<C64>>,
    max_drift: f64,
    steps: usize,
}

impl BlockSum {
    fn zero(n_obs: usize, n_times: usize, n_snaps: usize, dim: usize) -> Self {
        Self {
            series: vec![vec![0.0; n_times]; n_obs],
            norms_sq: vec![0.0; n_times],
            snapshots: vec![DMatrix::zeros(dim, dim); n_snaps],
            max_drift: 0.0,
            steps: 0,
        }
    }

    fn add(&mut self, out: &TrajectoryOutput) {
        for (t_idx, values) in out.series.iter().enumerate() {
            for (o, &v) in values.iter().enumerate() {
                self.series[o][t_idx] += v;
            }
            self.norms_sq[t_idx] += out.norms_sq[t_idx];
        }
        for (acc, psi) in self.snapshots.iter_mut().zip(&out.snapshot_states) {
            // rank-one update |psi><psi|
            for j in 0..psi.len() {
                let pj = psi[j].conj();
                for i in 0..psi.len() {
                    acc[(i, j)] += psi[i] * pj;
                }
            }
        }
        self.max_drift = self.max_drift.max(out.max_drift);
        self.steps += out.steps;
    }

    fn merge(&mut self, other: &BlockSum) {
        for (a, b) in self.series.iter_mut().zip(&other.series) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        for (x, y) in self.norms_sq.iter_mut().zip(&other.norms_sq) {
            *x += y;
        }
        for (a, b) in self.snapshots.iter_mut().zip(&other.snapshots) {
            *a += b;
        }
        self.max_drift = self.max_drift.max(other.max_drift);
        self.steps += other.steps;
    }
}

struct TrajectoryOutput {
    /// `series[time][observable]`.
    series: Vec<Vec<f64>>,
    norms_sq: Vec<f64>,
    snapshot_states: Vec<DVector<C64>>,
    max_drift: f64,
    steps: usize,
}

/// Shared per-run stepping machinery (immutable across trajectories).
struct StepEngine<'a> {
    bundle: &'a ModelBundle,
    grid: &'a TimeGrid,
    noise: NoiseSpec,
    dt: f64,
    h_total: SparseOperator,
    rng: CounterRng,
}

impl<'a> StepEngine<'a> {
    fn new(bundle: &'a ModelBundle, noise: &NoiseSpec, dt: f64, grid: &'a TimeGrid) -> Result<Self> {
        noise.validate()?;
        let dt_max = max_trajectory_dt(bundle, noise);
        if dt.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) || dt > dt_max {
            return Err(Error::StepTooLarge { dt, max: dt_max });
        }
        if grid.is_empty() {
            return Err(Error::InvalidParameter("grid has no output points".into()));
        }
        Ok(Self {
            bundle,
            grid,
            noise: *noise,
            dt,
            h_total: bundle.hamiltonian()?,
            rng: CounterRng::new(noise.seed),
        })
    }

    /// Evolve one realization, recording observables at every grid point
    /// and the state at the requested snapshot indices.
    fn evolve_one(
        &self,
        psi0: &StateVector,
        traj: u64,
        observables: &ObservableSet,
        snapshot_indices: &[usize],
    ) -> Result<TrajectoryOutput> {
        let n_channels = self.bundle.generators.len();
        let mut psi = psi0.amplitudes.clone();
        let mut global_step = 0u64;
        let mut max_drift = 0.0f64;
        let mut series = Vec::with_capacity(self.grid.len());
        let mut norms_sq = Vec::with_capacity(self.grid.len());
        let mut snapshot_states = Vec::with_capacity(snapshot_indices.len());

        // OU channel states, initialized from the stationary distribution.
        let mut ou_values: Vec<f64> = Vec::new();
        if let NoiseKind::OrnsteinUhlenbeck { gamma, diffusion } = self.noise.kind {
            let sigma = (diffusion / (2.0 * gamma)).sqrt();
            ou_values = (0..n_channels)
                .map(|a| sigma * self.rng.normal([traj, a as u64, 0, kind::OU_INIT]))
                .collect();
        }

        let mut t = self.grid.t_start;
        for (idx, &t_out) in self.grid.points.iter().enumerate() {
            if t_out > t + 1e-14 {
                let span = t_out - t;
                let n_sub = (span / self.dt).ceil().max(1.0) as u64;
                let h = span / n_sub as f64;
                for _ in 0..n_sub {
                    let coeffs = self.step_coefficients(traj, global_step, h, &mut ou_values);
                    self.apply_step(&mut psi, h, &coeffs);
                    global_step += 1;
                    let drift = (psi.norm() - 1.0).abs();
                    max_drift = max_drift.max(drift);
                    if max_drift > 1e-6 {
                        return Err(Error::NormDrift(max_drift));
                    }
                }
                t = t_out;
            }
            series.push(observables.evaluate_vec(&psi));
            norms_sq.push(psi.norm_squared());
            if snapshot_indices.contains(&idx) {
                snapshot_states.push(psi.clone());
            }
        }
        Ok(TrajectoryOutput {
            series,
            norms_sq,
            snapshot_states,
            max_drift,
            steps: global_step as usize,
        })
    }

    /// Per-channel coupling coefficients for one step of size `h`.
    fn step_coefficients(
        &self,
        traj: u64,
        step: u64,
        h: f64,
        ou_values: &mut [f64],
    ) -> Vec<f64> {
        match self.noise.kind {
            NoiseKind::White => {
                let amp = (2.0 * self.noise.kappa).sqrt() * h.sqrt();
                (0..self.bundle.generators.len())
                    .map(|a| amp * self.rng.normal([traj, a as u64, step, kind::WIENER]))
                    .collect()
            }
            NoiseKind::OrnsteinUhlenbeck { gamma, diffusion } => {
                let update = OuUpdate::new(gamma, diffusion, h).expect("validated");
                ou_values
                    .iter_mut()
                    .enumerate()
                    .map(|(a, xi)| {
                        let coeff = *xi * h;
                        *xi = update.advance(*xi, self.rng.normal([traj, a as u64, step, kind::OU_STEP]));
                        coeff
                    })
                    .collect()
            }
        }
    }

    /// `psi <- exp(-i [H h + sum_a c_a G_a]) psi`, via the Hermitian
    /// Lanczos propagator (exact to 1e-12 for these step norms).
    fn apply_step(&self, psi: &mut DVector<C64>, h: f64, coeffs: &[f64]) {
        debug_assert_eq!(coeffs.len(), self.bundle.generators.len());
        let generators = &self.bundle.generators;
        let h_total = &self.h_total;
        *psi = expv_hermitian(
            |x| {
                let mut out = DVector::zeros(x.len());
                h_total.apply_vec(x, &mut out, C64::new(h, 0.0));
                for (g, &c) in generators.iter().zip(coeffs) {
                    if c != 0.0 {
                        g.apply_vec(x, &mut out, C64::new(c, 0.0));
                    }
                }
                out
            },
            1.0,
            psi,
            1e-12,
            48,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{build_space, ModeKind};
    use crate::models::{build_u1_model, u1::initial_quench_state, U1Params};
    use crate::observables::ObservableSet;
    use crate::operators::{spin_half_operator, SpinComponent};
    use crate::sparse::StateVector;

    use super::super::lindblad::integrate_lindblad;

    #[test]
    fn zero_noise_matches_schroedinger() {
        let bundle = build_u1_model(&U1Params::default()).unwrap();
        let psi0 = initial_quench_state(&bundle).unwrap();
        let grid = TimeGrid::uniform(0.0, 1.5, 16).unwrap();
        let noise = NoiseSpec::white(0.0, 3);
        let dt = default_trajectory_dt(&bundle, &noise);
        let traj = run_trajectory(&bundle, &noise, &psi0, &grid, dt).unwrap();
        let lind = integrate_lindblad(&bundle, 0.0, &[], &psi0.density(), &grid, 1e-10).unwrap();
        for name in ["g2", "E", "pop_P"] {
            let a = traj.series_by_name(name).unwrap();
            let b = lind.series_by_name(name).unwrap();
            let dev = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            assert!(dev < 1e-6, "{name} deviates by {dev:.2e}");
        }
        assert!(traj.diagnostics.max_norm_drift < 1e-9);
    }

    #[test]
    fn dephasing_rate_matches_analytic() {
        // Single spin, H = 0, one channel G = S^z: the averaged coherence
        // decays as exp(-kappa t) in the 2 kappa G rho G convention.
        let space = build_space(vec![ModeKind::SpinSite { site: 1 }], None).unwrap();
        let zero = SparseOperator::zero(space.clone());
        let sz = spin_half_operator(&space, &ModeKind::SpinSite { site: 1 }, SpinComponent::Z).unwrap();
        let bundle =
            ModelBundle::custom("dephasing", space.clone(), zero.clone(), zero, vec![sz]).unwrap();

        let kappa = 1.0;
        let mut amplitudes = nalgebra::DVector::zeros(2);
        amplitudes[0] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        amplitudes[1] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let psi0 = StateVector::new(space, amplitudes).unwrap();

        let t_end = 1.0;
        let grid = TimeGrid::uniform(0.0, t_end, 2).unwrap();
        let mut opts = EnsembleOptions::new(10_000);
        opts.dt = Some(0.01);
        opts.observables = Some(ObservableSet::new());
        opts.snapshot_times = vec![t_end];
        let noise = NoiseSpec::white(kappa, 99);
        let record = run_trajectory_ensemble(&bundle, &noise, &psi0, &grid, &opts).unwrap();
        let rho = &record.snapshots[0].1;
        let coherence = 2.0 * rho[(0, 1)].norm();
        let expected = (-kappa * t_end).exp();
        let rel = (coherence - expected).abs() / expected;
        assert!(rel < 0.05, "measured decay {coherence:.4} vs {expected:.4} (rel {rel:.3})");
    }

    #[test]
    fn ensemble_is_deterministic() {
        let bundle = build_u1_model(&U1Params { n_sites: 2, ..Default::default() }).unwrap();
        let psi0 = initial_quench_state(&bundle).unwrap();
        let grid = TimeGrid::uniform(0.0, 0.5, 6).unwrap();
        let noise = NoiseSpec::white(2.0, 12345);
        let opts = EnsembleOptions::new(70); // not a multiple of the block size
        let a = run_trajectory_ensemble(&bundle, &noise, &psi0, &grid, &opts).unwrap();
        let b = run_trajectory_ensemble(&bundle, &noise, &psi0, &grid, &opts).unwrap();
        for (name, series) in &a.series {
            let other = b.series_by_name(name).unwrap();
            for (x, y) in series.iter().zip(other) {
                assert_eq!(x.to_bits(), y.to_bits(), "series {name} not bitwise equal");
            }
        }
    }

    #[test]
    fn oversized_step_rejected() {
        let bundle = build_u1_model(&U1Params::default()).unwrap();
        let psi0 = initial_quench_state(&bundle).unwrap();
        let grid = TimeGrid::uniform(0.0, 1.0, 3).unwrap();
        let noise = NoiseSpec::white(10.0, 0);
        let err = run_trajectory(&bundle, &noise, &psi0, &grid, 0.5).unwrap_err();
        assert!(matches!(err, Error::StepTooLarge { .. }));
    }

    #[test]
    fn norm_preserved_under_strong_noise() {
        let bundle = build_u1_model(&U1Params::default()).unwrap();
        let psi0 = initial_quench_state(&bundle).unwrap();
        let grid = TimeGrid::uniform(0.0, 1.0, 5).unwrap();
        let noise = NoiseSpec::white(10.0, 4);
        let dt = default_trajectory_dt(&bundle, &noise);
        let record = run_trajectory(&bundle, &noise, &psi0, &grid, dt).unwrap();
        assert!(record.diagnostics.max_norm_drift < 1e-8);
        for &n in &record.trace {
            assert!((n - 1.0).abs() < 1e-8);
        }
    }
}
