//! Constrained quantum many-body dynamics protected by engineered classical
//! noise.
//!
//! The crate builds small lattice gauge models — a U(1) quantum link chain,
//! a U(2) quantum link model with fermionic rishons, and an Ising-type spin
//! chain — and evolves them with three interchangeable backends:
//!
//! - a Lindblad master-equation integrator (adaptive Runge-Kutta on the
//!   density matrix),
//! - stochastic trajectories driven by white or Ornstein-Uhlenbeck noise
//!   coupled linearly to the symmetry generators,
//! - a projected non-Hermitian evolution inside the constrained subspace,
//!   valid for strong noise.
//!
//! Strong noise coupled to the generators suppresses transitions out of the
//! generators' common kernel (a continuous Zeno effect), with residual
//! leakage scaling like `lambda^2 / kappa`. Observables quantify the
//! violation of the constraints (`g^2`), the population of the protected
//! subspace, and model-specific order parameters.
//!
//! The `zenolink` binary runs config-driven experiment presets and writes
//! CSV series plus a plot script; see the crate README.

pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod hilbert;
pub mod models;
pub mod observables;
pub mod operators;
pub mod sparse;

pub use error::{Error, Result};
