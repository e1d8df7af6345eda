#ifndef ZENOLINK_H
#define ZENOLINK_H

/* Generated by cbindgen from zenolink-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code of every fallible call.
 */
typedef enum {
  ZL_STATUS_OK = 0,
  ZL_STATUS_NULL_POINTER = 1,
  ZL_STATUS_INVALID_ARGUMENT = 2,
  ZL_STATUS_NUMERICAL_FAILURE = 3,
  ZL_STATUS_BUFFER_TOO_SMALL = 4,
  ZL_STATUS_PANIC = 5,
} ZlStatus;

/**
 * Opaque model handle: a built bundle plus its reference initial state.
 */
typedef struct ZlModel ZlModel;

/**
 * Opaque evolution record: time grid, named series, and the trace/norm
 * series.
 */
typedef struct ZlRecord ZlRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *zl_version(void);

/**
 * Copy the last error message (NUL-terminated, truncated to `len`).
 *
 * # Safety
 * `buf` must point to `len` writable bytes.
 */
ZlStatus zl_last_error(char *buf, uintptr_t len);

/**
 * Build the U(1) gauge chain with its large-mass quench initial state.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
ZlStatus zl_model_u1_new(uint32_t n_sites,
                         double j,
                         double m,
                         double lambda,
                         bool periodic,
                         double background_field,
                         ZlModel **out);

/**
 * Build the U(2) rishon model (default scattering strengths) with the
 * per-block singlet initial state.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
ZlStatus zl_model_u2_new(uint32_t n_blocks, double j, double m, bool include_barred, ZlModel **out);

/**
 * Build the spin ring with the all-down ferromagnet initial state.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
ZlStatus zl_model_spin_chain_new(uint32_t n_spins,
                                 double h,
                                 double jz,
                                 double delta,
                                 double jx,
                                 bool per_site_noise,
                                 ZlModel **out);

/**
 * Hilbert-space dimension of a model (0 for a null handle).
 *
 * # Safety
 * `model` must be null or a live handle.
 */
uintptr_t zl_model_dim(const ZlModel *model);

/**
 * # Safety
 * `model` must come from a `zl_model_*_new` call and not be freed twice.
 */
void zl_model_free(ZlModel *model);

/**
 * Master-equation evolution from the model's initial state, recording the
 * default observables on `n_points` uniform times over `[0, t_end]`.
 *
 * # Safety
 * `model` and `out` must be valid pointers.
 */
ZlStatus zl_evolve_lindblad(const ZlModel *model,
                            double kappa,
                            double t_end,
                            uintptr_t n_points,
                            double tol,
                            ZlRecord **out);

/**
 * Ensemble-averaged stochastic trajectories with white noise of strength
 * `kappa`, reproducible from `seed`.
 *
 * # Safety
 * `model` and `out` must be valid pointers.
 */
ZlStatus zl_evolve_trajectory(const ZlModel *model,
                              double kappa,
                              double t_end,
                              uintptr_t n_points,
                              uintptr_t n_trajectories,
                              uint64_t seed,
                              ZlRecord **out);

/**
 * Strong-noise effective evolution inside the protected subspace.
 *
 * # Safety
 * `model` and `out` must be valid pointers.
 */
ZlStatus zl_evolve_projected(const ZlModel *model,
                             double kappa,
                             double t_end,
                             uintptr_t n_points,
                             double tol,
                             ZlRecord **out);

/**
 * Number of grid points in a record.
 *
 * # Safety
 * `record` must be null or a live handle.
 */
uintptr_t zl_record_len(const ZlRecord *record);

/**
 * Number of recorded observable series.
 *
 * # Safety
 * `record` must be null or a live handle.
 */
uintptr_t zl_record_n_series(const ZlRecord *record);

/**
 * Name of series `index` (owned by the record; valid until it is freed).
 *
 * # Safety
 * `record` must be null or a live handle.
 */
const char *zl_record_series_name(const ZlRecord *record, uintptr_t index);

/**
 * Copy the time grid into `buf`.
 *
 * # Safety
 * `buf` must point to `len` writable doubles.
 */
ZlStatus zl_record_times(const ZlRecord *record, double *buf, uintptr_t len);

/**
 * Copy a named observable series into `buf`.
 *
 * # Safety
 * `name` must be NUL-terminated; `buf` must point to `len` writable
 * doubles.
 */
ZlStatus zl_record_series(const ZlRecord *record, const char *name, double *buf, uintptr_t len);

/**
 * Copy the trace (master equation, projected) or mean squared norm
 * (trajectories) series into `buf`.
 *
 * # Safety
 * `buf` must point to `len` writable doubles.
 */
ZlStatus zl_record_trace(const ZlRecord *record, double *buf, uintptr_t len);

/**
 * # Safety
 * `record` must come from an evolve call and not be freed twice.
 */
void zl_record_free(ZlRecord *record);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ZENOLINK_H */
