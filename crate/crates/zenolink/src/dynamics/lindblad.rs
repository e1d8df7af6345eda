//! Master-equation integration on the dense density matrix.
//!
//! ```text
//! drho/dt = -i[H, rho] + kappa sum_G (2 G rho G - G^2 rho - rho G^2)
//!           + sum_extra gamma (2 L rho L^dag - L^dag L rho - rho L^dag L)
//! ```
//!
//! Hermitian diagonal jump operators (every U(1) Gauss generator, the spin
//! sublattice sums) contribute a pure elementwise damping
//! `-rate (g_i - g_j)^2 rho_ij`; together with the diagonal part of `H`
//! they are folded into one complex weight matrix applied per entry, which
//! leaves only the off-diagonal Hamiltonian and any non-diagonal jumps as
//! sparse products. The trace is never renormalized; its drift is reported
//! through the record.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::models::ModelBundle;
use crate::observables::{default_observables, ObservableSet};
use crate::sparse::{DensityMatrix, SparseOperator, C64};

use super::rk45::{integrate_grid, RkOptions};
use super::{EvolutionRecord, TimeGrid, TraceKind};

#[derive(Debug, Clone)]
pub struct LindbladOptions {
    /// Common rate of the generator channels.
    pub kappa: f64,
    /// Jump operators for the `kappa` channels; defaults to the bundle's
    /// generators. Used by imperfect-addressing studies.
    pub jumps: Option<Vec<SparseOperator>>,
    /// Additional channels with their own rates (e.g. onsite loss).
    pub extra_jumps: Vec<(SparseOperator, f64)>,
    pub tol: f64,
    /// Observables to record; defaults to the bundle's set.
    pub observables: Option<ObservableSet>,
    /// Grid times at which to store full density-matrix snapshots.
    pub snapshot_times: Vec<f64>,
}

impl LindbladOptions {
    pub fn new(kappa: f64, tol: f64) -> Self {
        Self { kappa, jumps: None, extra_jumps: Vec::new(), tol, observables: None, snapshot_times: Vec::new() }
    }
}

/// Integrate the master equation with the bundle's generators as jump
/// operators at rate `kappa`, plus `extra_jumps`.
pub fn integrate_lindblad(
    bundle: &ModelBundle,
    kappa: f64,
    extra_jumps: &[(SparseOperator, f64)],
    rho0: &DensityMatrix,
    grid: &TimeGrid,
    tol: f64,
) -> Result<EvolutionRecord> {
    let mut opts = LindbladOptions::new(kappa, tol);
    opts.extra_jumps = extra_jumps.to_vec();
    integrate_lindblad_with(bundle, &opts, rho0, grid)
}

pub fn integrate_lindblad_with(
    bundle: &ModelBundle,
    opts: &LindbladOptions,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
) -> Result<EvolutionRecord> {
    if opts.kappa < 0.0 || opts.tol <= 0.0 {
        return Err(Error::InvalidParameter("kappa >= 0 and tol > 0 required".into()));
    }
    let dim = bundle.dim();
    if rho0.dim() != dim {
        return Err(Error::DimensionMismatch { op: dim, state: rho0.dim() });
    }
    let herm = rho0.hermiticity_violation();
    if herm > 1e-8 {
        return Err(Error::NonHermitianState(herm));
    }
    let trace = rho0.trace().re;
    if (trace - 1.0).abs() > 1e-6 {
        return Err(Error::BadTrace(trace));
    }

    let observables = match &opts.observables {
        Some(set) => set.clone(),
        None => default_observables(bundle)?,
    };
    let rhs = build_rhs(bundle, opts)?;
    let names = observables.names();
    let mut record = EvolutionRecord::new(grid.points.clone(), &names, TraceKind::DensityTrace);

    let mut snapshot_queue = resolve_snapshot_indices(&opts.snapshot_times, grid)?;
    let mut workspace = DMatrix::zeros(dim, dim);
    let stats = integrate_grid(
        |y, out| rhs.apply(y, out, &mut workspace),
        grid.t_start,
        rho0.matrix.clone(),
        &grid.points,
        &RkOptions { tol: opts.tol, dt_initial: None },
        |idx, t, rho| {
            record.push_values(&names, &observables.evaluate_dense(rho));
            record.trace.push(rho.diagonal().iter().map(|v| v.re).sum());
            let herm = hermiticity_violation(rho);
            record.diagnostics.max_hermiticity_violation =
                record.diagnostics.max_hermiticity_violation.max(herm);
            let min_diag = rho.diagonal().iter().map(|v| v.re).fold(f64::INFINITY, f64::min);
            record.diagnostics.min_eigenvalue_proxy =
                record.diagnostics.min_eigenvalue_proxy.min(min_diag);
            if snapshot_queue.first() == Some(&idx) {
                snapshot_queue.remove(0);
                record.snapshots.push((t, rho.clone()));
            }
        },
    )?;
    record.diagnostics.steps = stats.steps;
    record.diagnostics.rhs_evals = stats.rhs_evals;
    record.diagnostics.max_step_error = stats.max_step_error;
    record.check_lengths();
    Ok(record)
}

/// Map requested snapshot times onto grid indices (ascending).
pub(crate) fn resolve_snapshot_indices(times: &[f64], grid: &TimeGrid) -> Result<Vec<usize>> {
    let mut indices = Vec::with_capacity(times.len());
    for &t in times {
        let idx = grid
            .points
            .iter()
            .position(|&p| (p - t).abs() <= 1e-9 * (1.0 + t.abs()))
            .ok_or_else(|| Error::Config(format!("snapshot time {t} is not a grid point")))?;
        indices.push(idx);
    }
    indices.sort_unstable();
    indices.dedup();
    Ok(indices)
}

fn hermiticity_violation(m: &DMatrix<C64>) -> f64 {
    let mut max = 0.0f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            max = max.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    max
}

/// Precomputed right-hand side of the master equation.
pub(crate) struct LindbladRhs {
    /// Elementwise weights: `-i (h_i - h_j) - sum_diag rate (g_i - g_j)^2`.
    weights: DMatrix<C64>,
    /// Off-diagonal Hamiltonian minus `i sum rate L^dag L` of non-diagonal
    /// jumps; enters as `-i (K rho - rho K^dag)`.
    k_off: SparseOperator,
    k_off_adj: SparseOperator,
    /// Non-diagonal jumps `(L, L^dag, 2 rate)`.
    general: Vec<(SparseOperator, SparseOperator, f64)>,
}

pub(crate) fn build_rhs(bundle: &ModelBundle, opts: &LindbladOptions) -> Result<LindbladRhs> {
    let dim = bundle.dim();
    let h = bundle.hamiltonian()?;

    let mut jump_list: Vec<(SparseOperator, f64)> = Vec::new();
    let kappa_jumps = opts.jumps.as_ref().unwrap_or(&bundle.generators);
    for g in kappa_jumps {
        jump_list.push((g.clone(), opts.kappa));
    }
    jump_list.extend(opts.extra_jumps.iter().cloned());

    let h_diag = h.diagonal();
    let mut weights = DMatrix::<C64>::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            weights[(i, j)] = C64::new(0.0, -(h_diag[i].re - h_diag[j].re));
        }
    }

    let off_triplets: Vec<_> = h.entries().filter(|(r, c, _)| r != c).collect();
    let mut k_off = SparseOperator::from_triplets(bundle.space.clone(), off_triplets);
    let mut general = Vec::new();
    for (l, rate) in jump_list {
        if rate == 0.0 {
            continue;
        }
        if l.is_diagonal() && l.is_hermitian() {
            let g = l.diagonal();
            for i in 0..dim {
                for j in 0..dim {
                    let d = g[i].re - g[j].re;
                    weights[(i, j)] += C64::new(-rate * d * d, 0.0);
                }
            }
        } else {
            let l_adj = l.adjoint();
            let ldl = l_adj.matmul(&l)?;
            k_off = k_off.add(&ldl.scale(C64::new(0.0, -rate)))?;
            general.push((l, l_adj, 2.0 * rate));
        }
    }
    let k_off_adj = k_off.adjoint();
    Ok(LindbladRhs { weights, k_off, k_off_adj, general })
}

impl LindbladRhs {
    pub(crate) fn apply(&self, rho: &DMatrix<C64>, out: &mut DMatrix<C64>, tmp: &mut DMatrix<C64>) {
        // elementwise part
        for ((o, w), r) in out.iter_mut().zip(self.weights.iter()).zip(rho.iter()) {
            *o = w * r;
        }
        // -i (K rho - rho K^dag)
        self.k_off.apply_left(rho, out, C64::new(0.0, -1.0));
        self.k_off_adj.apply_right(rho, out, C64::new(0.0, 1.0));
        // 2 rate L rho L^dag for non-diagonal jumps
        for (l, l_adj, rate2) in &self.general {
            tmp.fill(C64::new(0.0, 0.0));
            l.apply_left(rho, tmp, C64::new(1.0, 0.0));
            l_adj.apply_right(tmp, out, C64::new(*rate2, 0.0));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_u1_model, u1::initial_quench_state, U1Params};
    use crate::sparse::StateVector;

    #[test]
    fn stationary_eigenstate_stays_put() {
        // kappa = 0, lambda = 0: an H0 eigenprojector is stationary.
        let p = U1Params { lambda: 0.0, m: 0.3, ..Default::default() };
        let bundle = build_u1_model(&p).unwrap();
        let eig = bundle.h0.to_dense().symmetric_eigen();
        let ground = (0..bundle.dim())
            .min_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]))
            .unwrap();
        let psi = StateVector::new(bundle.space.clone(), eig.eigenvectors.column(ground).into())
            .unwrap()
            .normalized();
        let grid = TimeGrid::uniform(0.0, 2.0, 21).unwrap();
        let record = integrate_lindblad(&bundle, 0.0, &[], &psi.density(), &grid, 1e-9).unwrap();
        for name in ["g2", "E", "pop_P"] {
            let series = record.series_by_name(name).unwrap();
            let drift =
                series.iter().map(|v| (v - series[0]).abs()).fold(0.0, f64::max);
            assert!(drift < 1e-8, "{name} drifted by {drift:.2e}");
        }
    }

    #[test]
    fn rhs_preserves_hermiticity_and_trace() {
        let bundle = build_u1_model(&U1Params::default()).unwrap();
        let opts = LindbladOptions::new(2.0, 1e-9);
        let rhs = build_rhs(&bundle, &opts).unwrap();
        let dim = bundle.dim();
        let mut x = 0xfeed_beefu64;
        let mut rand = move || {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        // random Hermitian rho (not necessarily positive; linearity suffices)
        let mut rho = DMatrix::<C64>::zeros(dim, dim);
        for i in 0..dim {
            for j in i..dim {
                let v = if i == j { C64::new(rand(), 0.0) } else { C64::new(rand(), rand()) };
                rho[(i, j)] = v;
                rho[(j, i)] = v.conj();
            }
        }
        let mut out = DMatrix::zeros(dim, dim);
        let mut tmp = DMatrix::zeros(dim, dim);
        rhs.apply(&rho, &mut out, &mut tmp);
        assert!(hermiticity_violation(&out) < 1e-13);
        let tr: C64 = out.diagonal().sum();
        assert!(tr.norm() < 1e-12 * dim as f64, "trace of drho/dt = {tr}");
    }

    #[test]
    fn gauge_variant_hopping_builds_up_g2() {
        let bundle = build_u1_model(&U1Params::default()).unwrap();
        let psi0 = initial_quench_state(&bundle).unwrap();
        let grid = TimeGrid::uniform(0.0, 3.0, 31).unwrap();
        let record = integrate_lindblad(&bundle, 0.0, &[], &psi0.density(), &grid, 1e-8).unwrap();
        let g2 = record.series_by_name("g2").unwrap();
        assert!(g2[0].abs() < 1e-10);
        assert!(g2.last().unwrap() > &1e-2, "g2 stayed at {:.3e}", g2.last().unwrap());
        // the electric field departs from the ideal (lambda = 0) curve
        let ideal_bundle =
            build_u1_model(&U1Params { lambda: 0.0, ..Default::default() }).unwrap();
        let ideal =
            integrate_lindblad(&ideal_bundle, 0.0, &[], &psi0.density(), &grid, 1e-8).unwrap();
        let dev: f64 = record
            .series_by_name("E")
            .unwrap()
            .iter()
            .zip(ideal.series_by_name("E").unwrap())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(dev > 1e-3);
    }

    #[test]
    fn fermion_number_conserved() {
        let bundle = build_u1_model(&U1Params::default()).unwrap();
        let psi0 = initial_quench_state(&bundle).unwrap();
        let grid = TimeGrid::uniform(0.0, 4.0, 41).unwrap();
        let mut opts = LindbladOptions::new(5.0, 1e-9);
        let mut set = crate::observables::ObservableSet::new();
        set.push("n_fermion", bundle.conserved[0].1.clone());
        opts.observables = Some(set);
        let record = integrate_lindblad_with(&bundle, &opts, &psi0.density(), &grid).unwrap();
        let n = record.series_by_name("n_fermion").unwrap();
        let drift = n.iter().map(|v| (v - n[0]).abs()).fold(0.0, f64::max);
        assert!(drift < 1e-8, "fermion number drift {drift:.2e}");
    }

    #[test]
    fn invalid_initial_state_rejected() {
        let bundle = build_u1_model(&U1Params::default()).unwrap();
        let grid = TimeGrid::uniform(0.0, 1.0, 5).unwrap();
        let dim = bundle.dim();
        let mut bad = DMatrix::<C64>::zeros(dim, dim);
        bad[(0, 1)] = C64::new(1.0, 0.0);
        bad[(0, 0)] = C64::new(1.0, 0.0);
        let rho = DensityMatrix::new(bundle.space.clone(), bad).unwrap();
        assert!(matches!(
            integrate_lindblad(&bundle, 1.0, &[], &rho, &grid, 1e-9),
            Err(Error::NonHermitianState(_))
        ));

        let half = StateVector::basis_state(bundle.space.clone(), 0);
        let mut rho = half.density();
        rho.matrix *= C64::new(0.5, 0.0);
        assert!(matches!(
            integrate_lindblad(&bundle, 1.0, &[], &rho, &grid, 1e-9),
            Err(Error::BadTrace(_))
        ));
    }
}
