//! Model builders: Hamiltonians, symmetry generators, and noise channels.
//!
//! A [`ModelBundle`] packages everything a backend needs: the constraint-
//! respecting Hamiltonian `H0`, the constraint-violating perturbation `H1`,
//! the Hermitian generators whose common kernel is the protected subspace,
//! and metadata for observables. Builders assert `[H0, G] = 0` for every
//! generator at construction.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hilbert::HilbertSpace;
use crate::operators::{fermion_lowering, fermion_number};
use crate::sparse::{SparseOperator, C64};

pub mod spin_chain;
pub mod u1;
pub mod u2;

pub use spin_chain::{build_spin_chain_model, NoiseConfig, SpinChainParams};
pub use u1::{build_u1_model, U1Params};
pub use u2::{build_u2_model, U2Params};

/// Lattice boundary condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Open,
    Periodic,
}

/// Which model family a bundle was built from.
#[derive(Debug, Clone)]
pub enum ModelKind {
    U1(U1Params),
    U2(U2Params),
    SpinChain(SpinChainParams),
    /// Hand-assembled instance (testing, FFI experiments).
    Custom(String),
}

/// A named model: Hamiltonians, generators, and observable metadata.
///
/// Immutable after construction; share across sweep workers via `Arc`.
#[derive(Debug, Clone)]
pub struct ModelBundle {
    pub kind: ModelKind,
    pub space: Arc<HilbertSpace>,
    pub h0: SparseOperator,
    pub h1: SparseOperator,
    /// Hermitian generators; their joint kernel is the physical subspace.
    pub generators: Vec<SparseOperator>,
    pub labels: Vec<String>,
    /// Operators expected to commute with both `H0` and `H1` (diagnostics).
    pub conserved: Vec<(String, SparseOperator)>,
    /// Cached `sum_G G^2`.
    pub generator_square_sum: SparseOperator,
    /// Normalization for the constraint-violation observable `g^2`.
    pub n_generator_sites: usize,
    /// Largest coupling magnitude; sets default trajectory step sizes.
    pub energy_scale: f64,
}

impl ModelBundle {
    /// Shared construction tail: cache `sum G^2` and check the build-time
    /// invariants (hermiticity, `[H0, G] = 0`).
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn assemble(
        kind: ModelKind,
        space: Arc<HilbertSpace>,
        h0: SparseOperator,
        h1: SparseOperator,
        generators: Vec<SparseOperator>,
        labels: Vec<String>,
        conserved: Vec<(String, SparseOperator)>,
        n_generator_sites: usize,
        energy_scale: f64,
    ) -> Result<Self> {
        assert_eq!(generators.len(), labels.len());
        let mut square_sum = SparseOperator::zero(space.clone());
        for (g, label) in generators.iter().zip(&labels) {
            assert!(g.is_hermitian(), "generator {label} is not Hermitian");
            let comm = h0.commutator(g)?;
            assert!(
                comm.max_abs() <= 1e-12 * (1.0 + h0.max_abs()),
                "[H0, {label}] != 0 (max abs {:.3e})",
                comm.max_abs()
            );
            square_sum = square_sum.add(&g.matmul(g)?)?;
        }
        Ok(Self {
            kind,
            space,
            h0,
            h1,
            generators,
            labels,
            conserved,
            generator_square_sum: square_sum,
            n_generator_sites,
            energy_scale,
        })
    }

    /// Assemble an ad-hoc bundle from explicit operators. The usual
    /// build-time invariants (Hermitian generators, `[H0, G] = 0`) apply.
    pub fn custom(
        name: impl Into<String>,
        space: Arc<HilbertSpace>,
        h0: SparseOperator,
        h1: SparseOperator,
        generators: Vec<SparseOperator>,
    ) -> Result<Self> {
        let labels = (0..generators.len()).map(|k| format!("G_{k}")).collect();
        let n_sites = generators.len().max(1);
        let energy_scale = h0.inf_norm().max(h1.inf_norm());
        Self::assemble(
            ModelKind::Custom(name.into()),
            space,
            h0,
            h1,
            generators,
            labels,
            Vec::new(),
            n_sites,
            energy_scale,
        )
    }

    /// `H0 + H1`.
    pub fn hamiltonian(&self) -> Result<SparseOperator> {
        self.h0.add(&self.h1)
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn is_u1(&self) -> bool {
        matches!(self.kind, ModelKind::U1(_))
    }

    pub fn is_spin_chain(&self) -> bool {
        matches!(self.kind, ModelKind::SpinChain(_))
    }
}

/// Project an operator built on the unrestricted parent space onto a
/// sector-restricted space with the same layout: rows and columns outside
/// the sector are dropped. Jordan-Wigner strings are always evaluated on
/// the parent space, so signs are unaffected by the restriction.
pub(crate) fn restrict_to_sector(
    op: &SparseOperator,
    target: &Arc<HilbertSpace>,
) -> SparseOperator {
    debug_assert_eq!(op.space().parent_dim(), target.parent_dim());
    debug_assert_eq!(op.space().dim(), op.space().parent_dim(), "source must be unrestricted");
    if target.dim() == op.dim() {
        let triplets: Vec<_> = op.entries().collect();
        return SparseOperator::from_triplets(target.clone(), triplets);
    }
    let triplets: Vec<_> = op
        .entries()
        .filter_map(|(r, c, v)| {
            let row = target.index_of(r as u64).ok()?;
            let col = target.index_of(c as u64).ok()?;
            Some((row, col, v))
        })
        .collect();
    SparseOperator::from_triplets(target.clone(), triplets)
}

/// Orthonormal split of the space into the generators' common kernel
/// (physical subspace, columns of `kernel`) and its complement.
#[derive(Debug, Clone)]
pub struct SectorSplit {
    pub kernel: DMatrix<C64>,
    pub complement: DMatrix<C64>,
    /// Basis indices spanning the kernel when all generators are diagonal.
    pub kernel_indices: Option<Vec<usize>>,
}

impl SectorSplit {
    pub fn kernel_dim(&self) -> usize {
        self.kernel.ncols()
    }
}

/// Eigenvalues below this (relative to the largest one) count as kernel.
const KERNEL_TOL: f64 = 1e-10;

/// Split the Hilbert space into the common kernel of all generators and its
/// orthogonal complement, via `sum G^2 >= 0`.
pub fn gauge_sector_split(bundle: &ModelBundle) -> Result<SectorSplit> {
    let dim = bundle.dim();
    let s = &bundle.generator_square_sum;

    if bundle.generators.iter().all(|g| g.is_diagonal()) {
        let diag = s.diagonal();
        let scale = diag.iter().map(|v| v.re.abs()).fold(1.0, f64::max);
        let kernel_indices: Vec<usize> =
            (0..dim).filter(|&i| diag[i].re.abs() <= KERNEL_TOL * scale).collect();
        if kernel_indices.is_empty() {
            return Err(Error::EmptyKernel);
        }
        let mut kernel = DMatrix::zeros(dim, kernel_indices.len());
        for (col, &i) in kernel_indices.iter().enumerate() {
            kernel[(i, col)] = C64::new(1.0, 0.0);
        }
        let rest: Vec<usize> = (0..dim).filter(|i| !kernel_indices.contains(i)).collect();
        let mut complement = DMatrix::zeros(dim, rest.len());
        for (col, &i) in rest.iter().enumerate() {
            complement[(i, col)] = C64::new(1.0, 0.0);
        }
        return Ok(SectorSplit { kernel, complement, kernel_indices: Some(kernel_indices) });
    }

    let eig = s.to_dense().symmetric_eigen();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let scale = eig.eigenvalues.iter().fold(1.0f64, |m, &v| m.max(v.abs()));
    let n_kernel = order.iter().take_while(|&&i| eig.eigenvalues[i].abs() <= KERNEL_TOL * scale).count();
    if n_kernel == 0 {
        return Err(Error::EmptyKernel);
    }
    let mut kernel = DMatrix::zeros(dim, n_kernel);
    let mut complement = DMatrix::zeros(dim, dim - n_kernel);
    for (col, &i) in order.iter().enumerate() {
        let src = eig.eigenvectors.column(i);
        if col < n_kernel {
            kernel.column_mut(col).copy_from(&src);
        } else {
            complement.column_mut(col - n_kernel).copy_from(&src);
        }
    }
    Ok(SectorSplit { kernel, complement, kernel_indices: None })
}

/// Orthogonal projector onto the common kernel of all generators.
///
/// `P^2 = P = P^dagger` and `G P = 0` for every generator, to 1e-10.
pub fn gauge_projector(bundle: &ModelBundle) -> Result<SparseOperator> {
    let split = gauge_sector_split(bundle)?;
    let dense = &split.kernel * split.kernel.adjoint();
    let p = SparseOperator::from_dense(bundle.space.clone(), &dense);
    debug_assert!(p.matmul(&p)?.sub(&p)?.max_abs() < 1e-10);
    for g in &bundle.generators {
        let leak = g.matmul(&p)?.max_abs();
        assert!(leak < 1e-10, "generator does not annihilate the kernel (residual {leak:.3e})");
    }
    Ok(p)
}

/// How the noise couples imperfectly to the generators.
#[derive(Debug, Clone)]
pub enum ImperfectionKind {
    /// `f_x = psi_x^dag psi_x` added to each U(1) Gauss generator.
    OnsiteDensity,
    /// Caller-supplied perturbations, one per generator.
    Custom(Vec<SparseOperator>),
}

/// Imperfectly addressed generators `G~_x = G_x + epsilon f_x`.
pub fn imperfect_generators(
    bundle: &ModelBundle,
    epsilon: f64,
    kind: ImperfectionKind,
) -> Result<Vec<SparseOperator>> {
    if epsilon < 0.0 {
        return Err(Error::InvalidParameter(format!("epsilon = {epsilon} must be >= 0")));
    }
    let perturbations: Vec<SparseOperator> = match kind {
        ImperfectionKind::OnsiteDensity => {
            let params = match &bundle.kind {
                ModelKind::U1(p) => p,
                _ => {
                    return Err(Error::InvalidParameter(
                        "onsite_density imperfections are defined for the U(1) model only".into(),
                    ))
                }
            };
            (1..=params.n_sites)
                .map(|x| fermion_number(&bundle.space, &u1::site_mode(x)))
                .collect::<Result<_>>()?
        }
        ImperfectionKind::Custom(ops) => {
            if ops.len() != bundle.generators.len() {
                return Err(Error::InvalidParameter(format!(
                    "{} custom perturbations for {} generators",
                    ops.len(),
                    bundle.generators.len()
                )));
            }
            ops
        }
    };
    bundle
        .generators
        .iter()
        .zip(perturbations)
        .map(|(g, f)| g.add(&f.scale(C64::new(epsilon, 0.0))))
        .collect()
}

/// Onsite fermion-loss channels `(psi_x, gamma0)` for the U(1) model,
/// usable as extra Lindblad jumps.
pub fn loss_jumps(bundle: &ModelBundle, gamma0: f64) -> Result<Vec<(SparseOperator, f64)>> {
    let params = match &bundle.kind {
        ModelKind::U1(p) => p,
        _ => {
            return Err(Error::InvalidParameter(
                "onsite loss channels are defined for the U(1) model only".into(),
            ))
        }
    };
    if gamma0 < 0.0 {
        return Err(Error::InvalidParameter(format!("gamma0 = {gamma0} must be >= 0")));
    }
    (1..=params.n_sites)
        .map(|x| Ok((fermion_lowering(&bundle.space, &u1::site_mode(x))?, gamma0)))
        .collect()
}
