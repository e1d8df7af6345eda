//! C ABI over the zenolink simulation library.
//!
//! Handles are opaque; every fallible call returns a [`ZlStatus`] and
//! writes its result through an out-pointer. The last error message is
//! kept per thread and retrievable with [`zl_last_error`]. All functions
//! catch panics at the boundary.
//!
//! The generated header lives at `include/zenolink.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use zenolink::dynamics::{
    default_trajectory_dt, integrate_lindblad, projected_evolution, run_trajectory_ensemble,
    EnsembleOptions, EvolutionRecord, NoiseSpec, TimeGrid,
};
use zenolink::models::{
    build_spin_chain_model, build_u1_model, build_u2_model, spin_chain::ferromagnet_state,
    u1::initial_quench_state, u2::singlet_initial_state, Boundary, ModelBundle, NoiseConfig,
    SpinChainParams, U1Params, U2Params,
};
use zenolink::sparse::StateVector;

/// Status code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NumericalFailure = 3,
    BufferTooSmall = 4,
    Panic = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = CString::new(sanitized).unwrap());
}

/// Opaque model handle: a built bundle plus its reference initial state.
pub struct ZlModel {
    bundle: ModelBundle,
    psi0: StateVector,
}

/// Opaque evolution record: time grid, named series, and the trace/norm
/// series.
pub struct ZlRecord {
    record: EvolutionRecord,
    names: Vec<CString>,
}

impl ZlRecord {
    fn new(record: EvolutionRecord) -> Self {
        let names = record
            .names
            .iter()
            .map(|n| CString::new(n.as_str()).expect("series names have no NUL"))
            .collect();
        Self { record, names }
    }
}

fn guard<F: FnOnce() -> ZlStatus>(body: F) -> ZlStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic across FFI boundary".to_string());
            set_error(&message);
            ZlStatus::Panic
        }
    }
}

fn emit_model(result: zenolink::Result<ZlModel>, out: *mut *mut ZlModel) -> ZlStatus {
    match result {
        Ok(model) => {
            unsafe { *out = Box::into_raw(Box::new(model)) };
            ZlStatus::Ok
        }
        Err(err) => {
            set_error(&err.to_string());
            ZlStatus::InvalidArgument
        }
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn zl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copy the last error message (NUL-terminated, truncated to `len`).
///
/// # Safety
/// `buf` must point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn zl_last_error(buf: *mut c_char, len: usize) -> ZlStatus {
    if buf.is_null() || len == 0 {
        return ZlStatus::NullPointer;
    }
    LAST_ERROR.with(|slot| {
        let message = slot.borrow();
        let bytes = message.as_bytes_with_nul();
        let n = bytes.len().min(len);
        std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
        *buf.add(len - 1) = 0;
        if n < bytes.len() {
            ZlStatus::BufferTooSmall
        } else {
            ZlStatus::Ok
        }
    })
}

/// Build the U(1) gauge chain with its large-mass quench initial state.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn zl_model_u1_new(
    n_sites: u32,
    j: f64,
    m: f64,
    lambda: f64,
    periodic: bool,
    background_field: f64,
    out: *mut *mut ZlModel,
) -> ZlStatus {
    if out.is_null() {
        return ZlStatus::NullPointer;
    }
    guard(|| {
        let params = U1Params {
            n_sites,
            j,
            m,
            lambda,
            boundary: if periodic { Boundary::Periodic } else { Boundary::Open },
            background_field,
            ..Default::default()
        };
        let built = build_u1_model(&params).and_then(|bundle| {
            let psi0 = initial_quench_state(&bundle)?;
            Ok(ZlModel { bundle, psi0 })
        });
        emit_model(built, out)
    })
}

/// Build the U(2) rishon model (default scattering strengths) with the
/// per-block singlet initial state.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn zl_model_u2_new(
    n_blocks: u32,
    j: f64,
    m: f64,
    include_barred: bool,
    out: *mut *mut ZlModel,
) -> ZlStatus {
    if out.is_null() {
        return ZlStatus::NullPointer;
    }
    guard(|| {
        let params = U2Params { n_blocks, j, m, include_barred, ..Default::default() };
        let built = build_u2_model(&params).and_then(|bundle| {
            let psi0 = singlet_initial_state(&bundle)?;
            Ok(ZlModel { bundle, psi0 })
        });
        emit_model(built, out)
    })
}

/// Build the spin ring with the all-down ferromagnet initial state.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn zl_model_spin_chain_new(
    n_spins: u32,
    h: f64,
    jz: f64,
    delta: f64,
    jx: f64,
    per_site_noise: bool,
    out: *mut *mut ZlModel,
) -> ZlStatus {
    if out.is_null() {
        return ZlStatus::NullPointer;
    }
    guard(|| {
        let params = SpinChainParams {
            n_spins,
            h,
            jz,
            delta,
            jx,
            noise_config: if per_site_noise { NoiseConfig::PerSite } else { NoiseConfig::EvenOdd },
        };
        let built = build_spin_chain_model(&params).and_then(|bundle| {
            let psi0 = ferromagnet_state(&bundle)?;
            Ok(ZlModel { bundle, psi0 })
        });
        emit_model(built, out)
    })
}

/// Hilbert-space dimension of a model (0 for a null handle).
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn zl_model_dim(model: *const ZlModel) -> usize {
    if model.is_null() {
        return 0;
    }
    (*model).bundle.dim()
}

/// # Safety
/// `model` must come from a `zl_model_*_new` call and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn zl_model_free(model: *mut ZlModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

fn emit_record(
    result: zenolink::Result<EvolutionRecord>,
    out: *mut *mut ZlRecord,
) -> ZlStatus {
    match result {
        Ok(record) => {
            unsafe { *out = Box::into_raw(Box::new(ZlRecord::new(record))) };
            ZlStatus::Ok
        }
        Err(err) => {
            set_error(&err.to_string());
            ZlStatus::NumericalFailure
        }
    }
}

unsafe fn evolve_common(
    model: *const ZlModel,
    t_end: f64,
    n_points: usize,
    out: *mut *mut ZlRecord,
) -> Result<(&'static ZlModel, TimeGrid), ZlStatus> {
    if model.is_null() || out.is_null() {
        return Err(ZlStatus::NullPointer);
    }
    match TimeGrid::uniform(0.0, t_end, n_points) {
        Ok(grid) => Ok((&*model, grid)),
        Err(err) => {
            set_error(&err.to_string());
            Err(ZlStatus::InvalidArgument)
        }
    }
}

/// Master-equation evolution from the model's initial state, recording the
/// default observables on `n_points` uniform times over `[0, t_end]`.
///
/// # Safety
/// `model` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn zl_evolve_lindblad(
    model: *const ZlModel,
    kappa: f64,
    t_end: f64,
    n_points: usize,
    tol: f64,
    out: *mut *mut ZlRecord,
) -> ZlStatus {
    guard(|| {
        let (handle, grid) = match evolve_common(model, t_end, n_points, out) {
            Ok(v) => v,
            Err(status) => return status,
        };
        let result =
            integrate_lindblad(&handle.bundle, kappa, &[], &handle.psi0.density(), &grid, tol);
        emit_record(result, out)
    })
}

/// Ensemble-averaged stochastic trajectories with white noise of strength
/// `kappa`, reproducible from `seed`.
///
/// # Safety
/// `model` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn zl_evolve_trajectory(
    model: *const ZlModel,
    kappa: f64,
    t_end: f64,
    n_points: usize,
    n_trajectories: usize,
    seed: u64,
    out: *mut *mut ZlRecord,
) -> ZlStatus {
    guard(|| {
        let (handle, grid) = match evolve_common(model, t_end, n_points, out) {
            Ok(v) => v,
            Err(status) => return status,
        };
        let noise = NoiseSpec::white(kappa, seed);
        let mut opts = EnsembleOptions::new(n_trajectories);
        opts.dt = Some(default_trajectory_dt(&handle.bundle, &noise));
        let result = run_trajectory_ensemble(&handle.bundle, &noise, &handle.psi0, &grid, &opts);
        emit_record(result, out)
    })
}

/// Strong-noise effective evolution inside the protected subspace.
///
/// # Safety
/// `model` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn zl_evolve_projected(
    model: *const ZlModel,
    kappa: f64,
    t_end: f64,
    n_points: usize,
    tol: f64,
    out: *mut *mut ZlRecord,
) -> ZlStatus {
    guard(|| {
        let (handle, grid) = match evolve_common(model, t_end, n_points, out) {
            Ok(v) => v,
            Err(status) => return status,
        };
        let result =
            projected_evolution(&handle.bundle, kappa, &handle.psi0.density(), &grid, tol);
        emit_record(result, out)
    })
}

/// Number of grid points in a record.
///
/// # Safety
/// `record` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn zl_record_len(record: *const ZlRecord) -> usize {
    if record.is_null() {
        return 0;
    }
    (*record).record.times.len()
}

/// Number of recorded observable series.
///
/// # Safety
/// `record` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn zl_record_n_series(record: *const ZlRecord) -> usize {
    if record.is_null() {
        return 0;
    }
    (*record).names.len()
}

/// Name of series `index` (owned by the record; valid until it is freed).
///
/// # Safety
/// `record` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn zl_record_series_name(
    record: *const ZlRecord,
    index: usize,
) -> *const c_char {
    if record.is_null() {
        return std::ptr::null();
    }
    let handle = &*record;
    match handle.names.get(index) {
        Some(name) => name.as_ptr(),
        None => std::ptr::null(),
    }
}

unsafe fn copy_series(values: &[f64], buf: *mut f64, len: usize) -> ZlStatus {
    if buf.is_null() {
        return ZlStatus::NullPointer;
    }
    if len < values.len() {
        set_error(&format!("buffer holds {len} values, record has {}", values.len()));
        return ZlStatus::BufferTooSmall;
    }
    std::ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
    ZlStatus::Ok
}

/// Copy the time grid into `buf`.
///
/// # Safety
/// `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn zl_record_times(
    record: *const ZlRecord,
    buf: *mut f64,
    len: usize,
) -> ZlStatus {
    if record.is_null() {
        return ZlStatus::NullPointer;
    }
    copy_series(&(*record).record.times, buf, len)
}

/// Copy a named observable series into `buf`.
///
/// # Safety
/// `name` must be NUL-terminated; `buf` must point to `len` writable
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn zl_record_series(
    record: *const ZlRecord,
    name: *const c_char,
    buf: *mut f64,
    len: usize,
) -> ZlStatus {
    if record.is_null() || name.is_null() {
        return ZlStatus::NullPointer;
    }
    let name = match CStr::from_ptr(name).to_str() {
        Ok(name) => name,
        Err(_) => {
            set_error("series name is not valid UTF-8");
            return ZlStatus::InvalidArgument;
        }
    };
    match (*record).record.series_by_name(name) {
        Some(values) => copy_series(values, buf, len),
        None => {
            set_error(&format!("no series named `{name}`"));
            ZlStatus::InvalidArgument
        }
    }
}

/// Copy the trace (master equation, projected) or mean squared norm
/// (trajectories) series into `buf`.
///
/// # Safety
/// `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn zl_record_trace(
    record: *const ZlRecord,
    buf: *mut f64,
    len: usize,
) -> ZlStatus {
    if record.is_null() {
        return ZlStatus::NullPointer;
    }
    copy_series(&(*record).record.trace, buf, len)
}

/// # Safety
/// `record` must come from an evolve call and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn zl_record_free(record: *mut ZlRecord) {
    if !record.is_null() {
        drop(Box::from_raw(record));
    }
}
