//! Shared test utilities: dense superoperator oracle, trace distance,
//! and seeded random instances.

#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use zenolink::hilbert::{build_space, HilbertSpace, ModeKind};
use zenolink::models::ModelBundle;
use zenolink::sparse::{SparseOperator, StateVector, C64};

/// Simple xorshift for reproducible test instances.
pub struct TestRng(pub u64);

impl TestRng {
    pub fn next_u64(&mut self) -> u64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        self.0
    }

    /// Uniform in (-0.5, 0.5).
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    }

    pub fn complex(&mut self) -> C64 {
        C64::new(self.uniform(), self.uniform())
    }
}

/// A spin-register space of `n` two-level modes (dimension `2^n`).
pub fn qubit_space(n: u32) -> Arc<HilbertSpace> {
    build_space((0..n).map(|site| ModeKind::SpinSite { site }).collect(), None).unwrap()
}

/// Random Hermitian operator with unit-scale entries, `fill` of the
/// off-diagonal pairs populated.
pub fn random_hermitian(space: &Arc<HilbertSpace>, rng: &mut TestRng, fill: f64) -> SparseOperator {
    let dim = space.dim();
    let mut triplets = Vec::new();
    for i in 0..dim {
        triplets.push((i, i, C64::new(rng.uniform(), 0.0)));
        for j in (i + 1)..dim {
            if rng.uniform() + 0.5 < fill {
                let v = rng.complex();
                triplets.push((i, j, v));
                triplets.push((j, i, v.conj()));
            }
        }
    }
    SparseOperator::from_triplets(space.clone(), triplets)
}

/// Random normalized pure state.
pub fn random_state(space: &Arc<HilbertSpace>, rng: &mut TestRng) -> StateVector {
    let raw = DVector::from_fn(space.dim(), |_, _| rng.complex());
    StateVector::new(space.clone(), raw).unwrap().normalized()
}

/// Random `(H0 = 0, H1 = H, generators)` bundle for backend equivalence
/// tests; generators are Hermitian, need not commute, and are normalized
/// to unit operator norm so step-size defaults stay moderate.
pub fn random_instance(
    space: &Arc<HilbertSpace>,
    rng: &mut TestRng,
    n_generators: usize,
) -> ModelBundle {
    let raw = random_hermitian(space, rng, 0.3);
    let h1 = raw.scale(C64::new(1.0 / raw.inf_norm(), 0.0));
    let h0 = SparseOperator::zero(space.clone());
    let generators = (0..n_generators)
        .map(|_| {
            let g = random_hermitian(space, rng, 0.2);
            g.scale(C64::new(1.0 / g.inf_norm(), 0.0))
        })
        .collect();
    ModelBundle::custom("random-instance", space.clone(), h0, h1, generators).unwrap()
}

/// Dense Liouvillian of `drho/dt = -i[Hrho] + sum rate (2 L rho L^+ - ...)`
/// acting on the column-major vectorization of `rho`:
/// `vec(A rho B) = (B^T (x) A) vec(rho)`.
pub fn dense_superoperator(
    h: &DMatrix<C64>,
    jumps: &[(DMatrix<C64>, f64)],
) -> DMatrix<C64> {
    let dim = h.nrows();
    let id = DMatrix::<C64>::identity(dim, dim);
    let minus_i = C64::new(0.0, -1.0);
    let mut sup = id.kronecker(h) * minus_i + h.transpose().kronecker(&id) * (-minus_i);
    for (l, rate) in jumps {
        let l_dag_l = l.adjoint() * l;
        let r = C64::new(*rate, 0.0);
        sup += l.conjugate().kronecker(l) * (r * 2.0);
        sup -= id.kronecker(&l_dag_l) * r;
        sup -= l_dag_l.transpose().kronecker(&id) * r;
    }
    sup
}

/// Propagate a density matrix exactly through the dense superoperator
/// exponential (the independent oracle for the Lindblad integrator).
pub fn propagate_superop(
    h: &DMatrix<C64>,
    jumps: &[(DMatrix<C64>, f64)],
    rho0: &DMatrix<C64>,
    t: f64,
) -> DMatrix<C64> {
    let dim = rho0.nrows();
    let sup = dense_superoperator(h, jumps) * C64::new(t, 0.0);
    let propagator = zenolink::dynamics::expm::expm(&sup);
    let vec_rho = DVector::from_iterator(dim * dim, rho0.iter().copied());
    let out = propagator * vec_rho;
    DMatrix::from_iterator(dim, dim, out.iter().copied())
}

/// Trace distance `0.5 ||a - b||_1` of two Hermitian matrices.
pub fn trace_distance(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    let diff = a - b;
    let eig = diff.symmetric_eigen();
    0.5 * eig.eigenvalues.iter().map(|v| v.abs()).sum::<f64>()
}

/// Max-abs deviation between two series.
pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
