//! Elementary fermion and spin operators.
//!
//! Fermionic lowering operators use the Jordan-Wigner convention
//! `c_j = (prod_{k<j} Z_k) sigma^-_j`, where the product runs over fermionic
//! modes below `j` in declaration order. Strings are evaluated in the
//! unrestricted occupation basis; on a sector-restricted space the operator
//! is the projection `P c_j P` onto the sector (rows/columns outside the
//! sector dropped), which keeps all signs identical to the parent space.
//!
//! Spin-1/2 operators act on single spin modes and commute with everything
//! else by construction.

use std::sync::Arc;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::hilbert::{HilbertSpace, ModeKind};
use crate::sparse::{QuantumState, SparseOperator, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpinComponent {
    Plus,
    Minus,
    Z,
}

fn mode_position(space: &HilbertSpace, mode: &ModeKind) -> Result<usize> {
    space.mode_position(mode).ok_or_else(|| Error::ModeAbsent(mode.to_string()))
}

/// Jordan-Wigner sign for annihilating/creating at fermionic position `pos`
/// given occupation `occ`: parity of occupied fermionic modes below `pos`.
fn jw_sign(occ: u64, pos: usize) -> f64 {
    let below = occ & ((1u64 << pos) - 1);
    if below.count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Fermionic lowering operator `c_mode` with Jordan-Wigner signs.
pub fn fermion_lowering(space: &Arc<HilbertSpace>, mode: &ModeKind) -> Result<SparseOperator> {
    if !mode.is_fermionic() {
        return Err(Error::NotFermionic(mode.to_string()));
    }
    let pos = mode_position(space, mode)?;
    let bit = 1u64 << pos;
    let mut triplets = Vec::new();
    for (col, &occ) in space.states().iter().enumerate() {
        if occ & bit != 0 {
            let target = occ & !bit;
            if let Ok(row) = space.index_of(target) {
                triplets.push((row, col, C64::new(jw_sign(occ, pos), 0.0)));
            }
        }
    }
    Ok(SparseOperator::from_triplets(space.clone(), triplets))
}

/// Fermionic raising operator `c^dagger_mode`.
pub fn fermion_raising(space: &Arc<HilbertSpace>, mode: &ModeKind) -> Result<SparseOperator> {
    Ok(fermion_lowering(space, mode)?.adjoint())
}

/// Number operator `c^dagger c` (diagonal).
pub fn fermion_number(space: &Arc<HilbertSpace>, mode: &ModeKind) -> Result<SparseOperator> {
    if !mode.is_fermionic() {
        return Err(Error::NotFermionic(mode.to_string()));
    }
    let pos = mode_position(space, mode)?;
    let bit = 1u64 << pos;
    let triplets = space
        .states()
        .iter()
        .enumerate()
        .filter(|(_, &occ)| occ & bit != 0)
        .map(|(i, _)| (i, i, C64::new(1.0, 0.0)))
        .collect::<Vec<_>>();
    Ok(SparseOperator::from_triplets(space.clone(), triplets))
}

/// Spin-1/2 operator on a spin mode. `Z` has eigenvalues +-1/2; label 0 of
/// the occupation string is `S^z = -1/2`, label 1 is `+1/2`.
pub fn spin_half_operator(
    space: &Arc<HilbertSpace>,
    mode: &ModeKind,
    component: SpinComponent,
) -> Result<SparseOperator> {
    if !mode.is_spin() {
        return Err(Error::NotSpin(mode.to_string()));
    }
    let pos = mode_position(space, mode)?;
    let bit = 1u64 << pos;
    let mut triplets = Vec::new();
    for (col, &occ) in space.states().iter().enumerate() {
        match component {
            SpinComponent::Z => {
                let val = if occ & bit != 0 { 0.5 } else { -0.5 };
                triplets.push((col, col, C64::new(val, 0.0)));
            }
            SpinComponent::Plus => {
                if occ & bit == 0 {
                    if let Ok(row) = space.index_of(occ | bit) {
                        triplets.push((row, col, C64::new(1.0, 0.0)));
                    }
                }
            }
            SpinComponent::Minus => {
                if occ & bit != 0 {
                    if let Ok(row) = space.index_of(occ & !bit) {
                        triplets.push((row, col, C64::new(1.0, 0.0)));
                    }
                }
            }
        }
    }
    Ok(SparseOperator::from_triplets(space.clone(), triplets))
}

/// `S^x = (S^+ + S^-)/2` on a spin mode.
pub fn spin_x(space: &Arc<HilbertSpace>, mode: &ModeKind) -> Result<SparseOperator> {
    let plus = spin_half_operator(space, mode, SpinComponent::Plus)?;
    let minus = spin_half_operator(space, mode, SpinComponent::Minus)?;
    Ok(plus.add(&minus)?.scale(C64::new(0.5, 0.0)))
}

/// Occupation and Jordan-Wigner sign of
/// `c^dagger_{modes[0]} ... c^dagger_{modes[k-1]} |0>`, applied right to
/// left. Returns `None` when a mode would be doubly created.
pub fn creation_product_occupation(
    space: &HilbertSpace,
    modes: &[&ModeKind],
) -> Result<Option<(u64, f64)>> {
    let mut occ = 0u64;
    let mut sign = 1.0;
    for mode in modes.iter().rev() {
        if !mode.is_fermionic() {
            return Err(Error::NotFermionic(mode.to_string()));
        }
        let pos = mode_position(space, mode)?;
        let bit = 1u64 << pos;
        if occ & bit != 0 {
            return Ok(None);
        }
        sign *= jw_sign(occ, pos);
        occ |= bit;
    }
    Ok(Some((occ, sign)))
}

/// Expectation value `<psi|A|psi>` or `tr(A rho)` with the contract checks
/// spelled out: dimensions must match, and a mixed state must have unit
/// trace unless `allow_unnormalized` is set (the projected backend works
/// with decaying traces). For Hermitian `A` on a valid state the imaginary
/// part is a diagnostic and asserted small in debug builds.
pub fn expectation<S: QuantumState>(
    op: &SparseOperator,
    state: &S,
    allow_unnormalized: bool,
) -> Result<C64> {
    if let Some(trace) = state_trace(state) {
        if !allow_unnormalized && (trace - 1.0).abs() > 1e-6 {
            return Err(Error::BadTrace(trace));
        }
    }
    let value = state.expect(op)?;
    if op.is_hermitian() && !allow_unnormalized {
        debug_assert!(
            value.im.abs() < 1e-10 * (1.0 + value.re.abs()),
            "hermitian expectation has imaginary part {:.3e}",
            value.im
        );
    }
    Ok(value)
}

fn state_trace<S: QuantumState>(state: &S) -> Option<f64> {
    // Only density matrices carry a trace-normalization precondition; pure
    // states are checked by the evolution backends via their norm.
    let id = SparseOperator::identity(state.state_space().clone());
    state.expect(&id).ok().map(|t| t.re)
}

/// Dense anticommutator `{A, B}` residual against `delta * 1`, used as the
/// canonical-anticommutation oracle in tests.
pub fn car_residual(a: &SparseOperator, b_dag: &SparseOperator, delta: f64) -> Result<f64> {
    let anti = a.anticommutator(b_dag)?;
    let id = SparseOperator::constant_diagonal(a.space().clone(), Complex::new(delta, 0.0));
    Ok(anti.sub(&id)?.max_abs())
}
