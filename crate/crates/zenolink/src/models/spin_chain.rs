//! Ising-type spin ring with a dissipatively protected ferromagnet.
//!
//! ```text
//! H0 = h sum_i s^z_i + Jz sum_<ij> s^z_i s^z_j
//! H1 = Delta sum_i s^x_i + Jx sum_<ij> s^x_i s^x_j
//! ```
//!
//! on a ring of `N` spins. The protected subspace is the single all-down
//! ferromagnet `|F>`. The noise couples to `s^z` sums; since the dissipator
//! is invariant under constant shifts of a Hermitian jump operator, the
//! stored generators are shifted by `+1/2` per spin so that `C |F> = 0`
//! holds exactly, making the kernel convention uniform across models.

use crate::error::{Error, Result};
use crate::hilbert::{build_space, ModeKind};
use crate::operators::{spin_half_operator, spin_x, SpinComponent};
use crate::sparse::{SparseOperator, StateVector, C64};

use super::{ModelBundle, ModelKind};

/// Noise-source layout for the spin ring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseConfig {
    /// One noise source per spin: `C_i = s^z_i + 1/2`.
    PerSite,
    /// Two sources pinning the sublattice magnetizations:
    /// `C_even/odd = sum_{i even/odd} (s^z_i + 1/2)`.
    EvenOdd,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpinChainParams {
    /// Ring length.
    pub n_spins: u32,
    /// Longitudinal field.
    pub h: f64,
    /// Nearest-neighbor `zz` coupling.
    pub jz: f64,
    /// Transverse field (constraint-violating).
    pub delta: f64,
    /// Nearest-neighbor `xx` coupling (constraint-violating).
    pub jx: f64,
    pub noise_config: NoiseConfig,
}

impl Default for SpinChainParams {
    fn default() -> Self {
        Self { n_spins: 8, h: 0.5, jz: 1.0, delta: 1.5, jx: 1.0, noise_config: NoiseConfig::PerSite }
    }
}

fn site(i: u32) -> ModeKind {
    ModeKind::SpinSite { site: i }
}

/// Build the spin-ring bundle. Sites are `1..=N`; ring bonds are
/// `(i, i+1 mod N)`, giving `N` bonds.
pub fn build_spin_chain_model(p: &SpinChainParams) -> Result<ModelBundle> {
    if p.n_spins < 2 {
        return Err(Error::InvalidParameter(format!("n_spins = {} must be >= 2", p.n_spins)));
    }
    if ![p.h, p.jz, p.delta, p.jx].iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidParameter("couplings must be finite".into()));
    }
    let space = build_space((1..=p.n_spins).map(site).collect(), None)?;
    let n = p.n_spins;

    // H0 is diagonal: evaluate it per basis state.
    let diag: Vec<C64> = space
        .states()
        .iter()
        .map(|&occ| {
            let sz = |i: u32| if occ >> (i - 1) & 1 == 1 { 0.5 } else { -0.5 };
            let mut e = 0.0;
            for i in 1..=n {
                let j = if i == n { 1 } else { i + 1 };
                e += p.h * sz(i) + p.jz * sz(i) * sz(j);
            }
            C64::new(e, 0.0)
        })
        .collect();
    let h0 = SparseOperator::from_diagonal(space.clone(), &diag);

    let mut h1 = SparseOperator::zero(space.clone());
    for i in 1..=n {
        let j = if i == n { 1 } else { i + 1 };
        let sx_i = spin_x(&space, &site(i))?;
        let sx_j = spin_x(&space, &site(j))?;
        h1 = h1
            .add(&sx_i.scale(C64::new(p.delta, 0.0)))?
            .add(&sx_i.matmul(&sx_j)?.scale(C64::new(p.jx, 0.0)))?;
    }

    let shifted_sz = |i: u32| -> Result<SparseOperator> {
        let sz = spin_half_operator(&space, &site(i), SpinComponent::Z)?;
        sz.add(&SparseOperator::constant_diagonal(space.clone(), C64::new(0.5, 0.0)))
    };
    let (generators, labels): (Vec<_>, Vec<_>) = match p.noise_config {
        NoiseConfig::PerSite => {
            let mut gens = Vec::new();
            let mut labels = Vec::new();
            for i in 1..=n {
                gens.push(shifted_sz(i)?);
                labels.push(format!("C_i={i}"));
            }
            (gens, labels)
        }
        NoiseConfig::EvenOdd => {
            let mut even = SparseOperator::zero(space.clone());
            let mut odd = SparseOperator::zero(space.clone());
            for i in 1..=n {
                let c = shifted_sz(i)?;
                if i % 2 == 0 {
                    even = even.add(&c)?;
                } else {
                    odd = odd.add(&c)?;
                }
            }
            (vec![even, odd], vec!["C_even".into(), "C_odd".into()])
        }
    };

    let energy_scale = p.h.abs().max(p.jz.abs()).max(p.delta.abs()).max(p.jx.abs());
    ModelBundle::assemble(
        ModelKind::SpinChain(p.clone()),
        space,
        h0,
        h1,
        generators,
        labels,
        Vec::new(),
        p.n_spins as usize,
        energy_scale,
    )
}

/// The all-down ferromagnet `|F>`, the protected state and quench initial
/// condition.
pub fn ferromagnet_state(bundle: &ModelBundle) -> Result<StateVector> {
    match &bundle.kind {
        ModelKind::SpinChain(_) => Ok(StateVector::basis_state(bundle.space.clone(), 0)),
        _ => Err(Error::InvalidParameter("ferromagnet_state needs a spin-chain bundle".into())),
    }
}
