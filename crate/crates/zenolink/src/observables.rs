//! Figures of merit computed from states or density matrices.
//!
//! - `g2`: mean squared generator expectation, `sum_G <G^2> / N_s`; zero
//!   exactly on the protected subspace and positive outside it.
//! - `E`: mean electric field `sum_links <S^z> / N_l` (U(1) model).
//! - `pop_P`: population of the protected subspace, `tr(P rho)`.
//! - `M`: mean magnetization `sum_i <s^z_i> / N` (spin chain).
//! - `n_fermion`: total fermion number (conservation diagnostic).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hilbert::ModeKind;
use crate::models::{gauge_projector, ModelBundle, ModelKind};
use crate::operators::{spin_half_operator, SpinComponent};
use crate::sparse::{QuantumState, SparseOperator, C64};

/// A named list of Hermitian observables evaluated along an evolution.
/// Values are real parts of the (raw, unnormalized) expectations.
#[derive(Debug, Clone)]
pub struct ObservableSet {
    entries: Vec<(String, SparseOperator)>,
}

impl ObservableSet {
    pub fn new() -> Self {
        Self { entries: Vec::new() }
    }

    pub fn push(&mut self, name: impl Into<String>, op: SparseOperator) -> &mut Self {
        assert!(op.is_hermitian(), "observables must be Hermitian");
        self.entries.push((name.into(), op));
        self
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&SparseOperator> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, op)| op)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &SparseOperator)> {
        self.entries.iter().map(|(n, op)| (n.as_str(), op))
    }

    pub fn evaluate_dense(&self, rho: &DMatrix<C64>) -> Vec<f64> {
        self.entries.iter().map(|(_, op)| op.expect_dense(rho).re).collect()
    }

    pub fn evaluate_vec(&self, psi: &DVector<C64>) -> Vec<f64> {
        self.entries.iter().map(|(_, op)| op.expect_vec(psi).re).collect()
    }
}

impl Default for ObservableSet {
    fn default() -> Self {
        Self::new()
    }
}

/// `sum_G G^2 / N_s` as an operator.
pub fn gauge_violation_operator(bundle: &ModelBundle) -> SparseOperator {
    bundle
        .generator_square_sum
        .scale(C64::new(1.0 / bundle.n_generator_sites as f64, 0.0))
}

/// Mean electric field operator `sum_links S^z / N_l` (U(1) only).
pub fn electric_field_operator(bundle: &ModelBundle) -> Result<SparseOperator> {
    if !bundle.is_u1() {
        return Err(Error::InvalidParameter("mean electric field needs a U(1) bundle".into()));
    }
    spin_z_mean(bundle, |m| matches!(m, ModeKind::SpinLink { .. }))
}

/// Mean magnetization operator `sum_i s^z_i / N` (spin chain only).
pub fn magnetization_operator(bundle: &ModelBundle) -> Result<SparseOperator> {
    if !bundle.is_spin_chain() {
        return Err(Error::InvalidParameter("magnetization needs a spin-chain bundle".into()));
    }
    spin_z_mean(bundle, |m| matches!(m, ModeKind::SpinSite { .. }))
}

fn spin_z_mean(bundle: &ModelBundle, pred: impl Fn(&ModeKind) -> bool) -> Result<SparseOperator> {
    let modes: Vec<ModeKind> =
        bundle.space.modes().iter().copied().filter(|m| pred(m)).collect();
    let mut total = SparseOperator::zero(bundle.space.clone());
    for mode in &modes {
        total = total.add(&spin_half_operator(&bundle.space, mode, SpinComponent::Z)?)?;
    }
    Ok(total.scale(C64::new(1.0 / modes.len() as f64, 0.0)))
}

/// Constraint violation `<sum_G G^2> / N_s >= 0`.
pub fn gauge_violation<S: QuantumState>(bundle: &ModelBundle, state: &S) -> Result<f64> {
    let value = state.expect(&gauge_violation_operator(bundle))?;
    debug_assert!(value.re > -1e-10 && value.im.abs() < 1e-9);
    Ok(value.re)
}

/// Mean electric field, in `[-1/2, 1/2]`.
pub fn mean_electric_field<S: QuantumState>(bundle: &ModelBundle, state: &S) -> Result<f64> {
    Ok(state.expect(&electric_field_operator(bundle)?)?.re)
}

/// Population `tr(P rho)` (or `<psi|P|psi>`) of the subspace projected on
/// by an idempotent Hermitian `projector`.
pub fn subspace_population<S: QuantumState>(projector: &SparseOperator, state: &S) -> Result<f64> {
    if !projector.is_hermitian() {
        return Err(Error::InvalidParameter("projector must be Hermitian".into()));
    }
    debug_assert!(
        projector.matmul(projector)?.sub(projector)?.max_abs() < 1e-10,
        "projector must be idempotent"
    );
    let value = state.expect(projector)?.re;
    debug_assert!((-1e-10..=1.0 + 1e-10).contains(&value));
    Ok(value)
}

/// Mean single-site magnetization, in `[-1/2, 1/2]`.
pub fn magnetization<S: QuantumState>(bundle: &ModelBundle, state: &S) -> Result<f64> {
    Ok(state.expect(&magnetization_operator(bundle)?)?.re)
}

/// The default per-model observable set recorded by every backend:
/// `g2` and `pop_P` everywhere, plus `E` for U(1) and `M` for the spin
/// chain.
pub fn default_observables(bundle: &ModelBundle) -> Result<ObservableSet> {
    let mut set = ObservableSet::new();
    set.push("g2", gauge_violation_operator(bundle));
    match &bundle.kind {
        ModelKind::U1(_) => {
            set.push("E", electric_field_operator(bundle)?);
        }
        ModelKind::SpinChain(_) => {
            set.push("M", magnetization_operator(bundle)?);
        }
        ModelKind::U2(_) => {}
        // Custom bundles may have an empty kernel; record g2 only.
        ModelKind::Custom(_) => return Ok(set),
    }
    set.push("pop_P", gauge_projector(bundle)?);
    Ok(set)
}
