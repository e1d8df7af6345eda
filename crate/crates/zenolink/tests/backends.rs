//! Cross-backend equivalences: trajectories vs the master equation, the
//! Lindblad integrator vs the dense superoperator oracle, colored vs white
//! noise, and the projected evolution vs the full one.

mod common;

use common::*;
use zenolink::dynamics::{
    integrate_lindblad, projected_evolution, run_trajectory_ensemble, EnsembleOptions, NoiseSpec,
    TimeGrid,
};
use zenolink::models::{build_u1_model, u1::initial_quench_state, U1Params};
use zenolink::observables::ObservableSet;
use zenolink::sparse::{SparseOperator, C64};

/// Small U(1) chain (dim 8) used where the full preset would be too slow.
fn tiny_u1(lambda: f64) -> (zenolink::models::ModelBundle, zenolink::sparse::StateVector) {
    let params = U1Params { n_sites: 2, lambda, ..Default::default() };
    let bundle = build_u1_model(&params).unwrap();
    let psi0 = initial_quench_state(&bundle).unwrap();
    (bundle, psi0)
}

#[test]
fn lindblad_matches_superoperator_exponential() {
    // Random small instance, oracle = expm of the dense Liouvillian on the
    // vectorized density matrix.
    let mut rng = TestRng(0x5eed_0001);
    let space = qubit_space(3);
    let bundle = random_instance(&space, &mut rng, 2);
    let kappa = 0.7;
    let psi0 = random_state(&space, &mut rng);
    let rho0 = psi0.density();

    let grid = TimeGrid::uniform(0.0, 1.0, 5).unwrap();
    let record = integrate_lindblad(&bundle, kappa, &[], &rho0, &grid, 1e-10).unwrap();

    let h = bundle.hamiltonian().unwrap().to_dense();
    let jumps: Vec<_> = bundle.generators.iter().map(|g| (g.to_dense(), kappa)).collect();
    let oracle = propagate_superop(&h, &jumps, &rho0.matrix, 1.0);

    // Compare the evolved density matrix via a final snapshot run.
    let mut opts = zenolink::dynamics::LindbladOptions::new(kappa, 1e-10);
    opts.snapshot_times = vec![1.0];
    let record2 =
        zenolink::dynamics::integrate_lindblad_with(&bundle, &opts, &rho0, &grid).unwrap();
    let (_, rho_end) = &record2.snapshots[0];
    let dev = (rho_end - &oracle).camax();
    assert!(dev < 1e-7, "integrator deviates from superoperator oracle by {dev:.2e}");
    assert!(record.trace.iter().all(|t| (t - 1.0).abs() < 1e-8));
}

#[test]
fn dissipator_invariant_under_constant_shift() {
    // D[G + c] = D[G] as superoperators, checked densely on dim 8.
    let mut rng = TestRng(0xabc123);
    let space = qubit_space(3);
    let g = random_hermitian(&space, &mut rng, 0.3);
    let shifted = g
        .add(&SparseOperator::constant_diagonal(space.clone(), C64::new(0.37, 0.0)))
        .unwrap();
    let h = nalgebra::DMatrix::<C64>::zeros(8, 8);
    let sup_a = dense_superoperator(&h, &[(g.to_dense(), 1.3)]);
    let sup_b = dense_superoperator(&h, &[(shifted.to_dense(), 1.3)]);
    assert!((sup_a - sup_b).camax() < 1e-12);
}

#[test]
fn trajectory_average_converges_to_lindblad() {
    // Monte Carlo error shrinks like 1/sqrt(M) toward the master equation.
    let (bundle, psi0) = tiny_u1(0.25);
    let kappa = 2.0;
    let t_end = 1.0;
    let grid = TimeGrid::uniform(0.0, t_end, 3).unwrap();

    let mut opts = zenolink::dynamics::LindbladOptions::new(kappa, 1e-10);
    opts.snapshot_times = vec![t_end];
    let lind =
        zenolink::dynamics::integrate_lindblad_with(&bundle, &opts, &psi0.density(), &grid)
            .unwrap();
    let rho_ref = &lind.snapshots[0].1;

    let noise = NoiseSpec::white(kappa, 2024);
    let mut last = f64::INFINITY;
    for &m in &[100usize, 400, 1600] {
        let mut eopts = EnsembleOptions::new(m);
        eopts.snapshot_times = vec![t_end];
        eopts.observables = Some(ObservableSet::new());
        let ens = run_trajectory_ensemble(&bundle, &noise, &psi0, &grid, &eopts).unwrap();
        let dist = trace_distance(&ens.snapshots[0].1, rho_ref);
        let bound = 4.0 / (m as f64).sqrt();
        assert!(dist <= bound, "M={m}: trace distance {dist:.4} > {bound:.4}");
        assert!(dist < last * 1.5, "error did not shrink: {dist:.4} after {last:.4}");
        last = dist;
    }
}

#[test]
fn ou_noise_reproduces_white_noise_limit() {
    // OU noise with relaxation much faster than the couplings acts like
    // white noise of strength D / (2 gamma^2).
    let (bundle, psi0) = tiny_u1(0.25);
    let gamma = 40.0;
    let kappa_eff = 1.0;
    let diffusion = 2.0 * kappa_eff * gamma * gamma;

    let grid = TimeGrid::uniform(0.0, 2.0, 9).unwrap();
    let lind =
        integrate_lindblad(&bundle, kappa_eff, &[], &psi0.density(), &grid, 1e-9).unwrap();

    let noise = NoiseSpec::ornstein_uhlenbeck(gamma, diffusion, 571);
    assert!((noise.effective_kappa() - kappa_eff).abs() < 1e-12);
    let mut eopts = EnsembleOptions::new(3000);
    eopts.dt = Some(0.05 / gamma);
    let ens = run_trajectory_ensemble(&bundle, &noise, &psi0, &grid, &eopts).unwrap();

    let g2_white = lind.series_by_name("g2").unwrap();
    let g2_ou = ens.series_by_name("g2").unwrap();
    let scale = g2_white.iter().fold(0.0f64, |m, &v| m.max(v));
    let dev = max_abs_diff(g2_white, g2_ou);
    assert!(
        dev <= 0.10 * scale,
        "OU vs white-noise g2 deviates by {dev:.3e} (allowed {:.3e})",
        0.10 * scale
    );
}

#[test]
fn projected_tracks_full_lindblad_at_strong_noise() {
    let params = U1Params::default();
    let bundle = build_u1_model(&params).unwrap();
    let psi0 = initial_quench_state(&bundle).unwrap();
    let rho0 = psi0.density();
    let grid = TimeGrid::uniform(0.0, 3.0, 31).unwrap();

    let kappa = 80.0;
    let full = integrate_lindblad(&bundle, kappa, &[], &rho0, &grid, 1e-8).unwrap();
    let proj = projected_evolution(&bundle, kappa, &rho0, &grid, 1e-9).unwrap();

    let e_full = full.series_by_name("E").unwrap();
    let e_proj = proj.series_by_name("E_norm").unwrap();
    // within 5% of the observable's dynamic range
    let dev = max_abs_diff(e_full, e_proj);
    assert!(dev <= 0.05 * 0.5, "projected E deviates by {dev:.3e}");
}

#[test]
fn sector_restriction_leaves_observables_unchanged() {
    // The U(1) dynamics conserves fermion number; running in the restricted
    // sector must reproduce the unrestricted observables.
    let full = build_u1_model(&U1Params::default()).unwrap();
    let restricted =
        build_u1_model(&U1Params { fermion_sector: Some(2), ..Default::default() }).unwrap();
    let grid = TimeGrid::uniform(0.0, 2.0, 11).unwrap();
    let kappa = 5.0;

    let rec_full = integrate_lindblad(
        &full,
        kappa,
        &[],
        &initial_quench_state(&full).unwrap().density(),
        &grid,
        1e-9,
    )
    .unwrap();
    let rec_res = integrate_lindblad(
        &restricted,
        kappa,
        &[],
        &initial_quench_state(&restricted).unwrap().density(),
        &grid,
        1e-9,
    )
    .unwrap();
    for name in ["g2", "E", "pop_P"] {
        let dev = max_abs_diff(
            rec_full.series_by_name(name).unwrap(),
            rec_res.series_by_name(name).unwrap(),
        );
        assert!(dev < 1e-7, "{name} differs across sector restriction by {dev:.2e}");
    }
}

#[test]
fn loss_channel_depletes_fermion_number() {
    let bundle = build_u1_model(&U1Params::default()).unwrap();
    let psi0 = initial_quench_state(&bundle).unwrap();
    let gamma0 = 0.05;
    let extra = zenolink::models::loss_jumps(&bundle, gamma0).unwrap();
    let grid = TimeGrid::uniform(0.0, 4.0, 21).unwrap();

    let mut set = ObservableSet::new();
    set.push("n_fermion", bundle.conserved[0].1.clone());
    let mut opts = zenolink::dynamics::LindbladOptions::new(10.0, 1e-9);
    opts.extra_jumps = extra;
    opts.observables = Some(set);
    let record =
        zenolink::dynamics::integrate_lindblad_with(&bundle, &opts, &psi0.density(), &grid)
            .unwrap();
    let n = record.series_by_name("n_fermion").unwrap();
    assert!(n[0] > 1.99 && n[0] < 2.01);
    // 2 gamma0 per fermion: N(t) ~ N(0) exp(-2 gamma0 t)
    let expected = n[0] * (-2.0 * gamma0 * 4.0f64).exp();
    let measured = *n.last().unwrap();
    assert!(
        (measured - expected).abs() < 0.02 * n[0],
        "N(4) = {measured:.4}, expected {expected:.4}"
    );
}

#[test]
fn ideal_dynamics_is_kappa_independent() {
    // With lambda = 0 the state never leaves the kernel, where every
    // generator annihilates it; the noise then acts trivially and E(t)
    // matches the kappa = 0 curve for any kappa.
    let params = U1Params { lambda: 0.0, ..Default::default() };
    let bundle = build_u1_model(&params).unwrap();
    let psi0 = initial_quench_state(&bundle).unwrap();
    let grid = TimeGrid::uniform(0.0, 4.0, 21).unwrap();
    let reference = integrate_lindblad(&bundle, 0.0, &[], &psi0.density(), &grid, 1e-9)
        .unwrap()
        .series_by_name("E")
        .unwrap()
        .to_vec();
    for kappa in [10.0, 80.0] {
        let run = integrate_lindblad(&bundle, kappa, &[], &psi0.density(), &grid, 1e-9).unwrap();
        let dev = max_abs_diff(run.series_by_name("E").unwrap(), &reference);
        assert!(dev < 1e-6, "kappa = {kappa}: E deviates by {dev:.2e}");
    }
}
