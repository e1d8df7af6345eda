//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate mode identity in layout: {0}")]
    DuplicateMode(String),
    #[error("layout must list fermionic modes before spin modes (mode {0} out of order)")]
    ModeOrdering(usize),
    #[error("empty layout")]
    EmptyLayout,
    #[error("sector filter leaves no basis states")]
    EmptySector,
    #[error("mode {0} not present in space")]
    ModeAbsent(String),
    #[error("mode {0} is not fermionic")]
    NotFermionic(String),
    #[error("mode {0} is not a spin mode")]
    NotSpin(String),
    #[error("occupation string has {got} modes, space has {want}")]
    MalformedOccupation { got: usize, want: usize },
    #[error("occupation {0:#b} lies outside the sector")]
    OutsideSector(u64),
    #[error("operator spaces do not match (dims {0} vs {1})")]
    SpaceMismatch(usize, usize),
    #[error("dimension mismatch: operator {op} vs state {state}")]
    DimensionMismatch { op: usize, state: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown coupling process name: {0}")]
    UnknownProcess(String),
    #[error("density matrix is not Hermitian (max deviation {0:.3e})")]
    NonHermitianState(f64),
    #[error("density matrix trace {0:.6} differs from 1")]
    BadTrace(f64),
    #[error("gauge generators have an empty common kernel")]
    EmptyKernel,
    #[error("initial state leaks out of the physical sector (norm {0:.3e})")]
    SectorLeak(f64),
    #[error("generator-squared block on the gauge-variant sector is singular")]
    SingularBlock,
    #[error("step size underflow at t = {t:.6e} (dt = {dt:.3e}); system too stiff for tolerance")]
    StepUnderflow { t: f64, dt: f64 },
    #[error("trajectory step dt = {dt:.3e} exceeds the stability bound {max:.3e}")]
    StepTooLarge { dt: f64, max: f64 },
    #[error("trajectory norm drift {0:.3e} exceeds 1e-6")]
    NormDrift(f64),
    #[error("projected trace increased by {0:.3e}; evolution not contractive")]
    TraceIncrease(f64),
    #[error("fit needs at least 3 points, got {0}")]
    FitTooFewPoints(usize),
    #[error("log-log fit requires positive data (offending value {0})")]
    FitNonPositive(f64),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
