#ifndef PHASEMIN_H
#define PHASEMIN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PmStatus {
  PM_STATUS_OK = 0,
  PM_STATUS_NULL_POINTER = 1,
  PM_STATUS_INVALID_ARGUMENT = 2,
  PM_STATUS_DIMENSION_MISMATCH = 3,
  PM_STATUS_SINGULAR_INSTANCE = 4,
  PM_STATUS_DEGENERATE_DIRECTION = 5,
  PM_STATUS_STALLED_AT_ZERO = 6,
  PM_STATUS_INTERNAL = 7,
} PmStatus;

typedef enum PmStopReason {
  PM_STOP_REASON_CONVERGED = 0,
  PM_STOP_REASON_MAX_ITER = 1,
  PM_STOP_REASON_STALLED = 2,
} PmStopReason;

/**
 * Opaque sensing instance.
 */
typedef struct PmInstance PmInstance;

typedef struct PmSolveConfig {
  double tol;
  size_t max_iter;
  size_t stall_window;
} PmSolveConfig;

typedef struct PmSolveReport {
  /**
   * 1 on success, 0 otherwise.
   */
  int success;
  double final_error;
  size_t iterations;
  enum PmStopReason stop_reason;
  /**
   * `|<u0, w>|` at the last iterate.
   */
  double final_correlation;
} PmSolveReport;

typedef struct PmFgEstimate {
  double c;
  double f_hat;
  double stderr_f;
  double g_hat;
  double stderr_g;
  size_t n_samples;
} PmFgEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *pm_version(void);

/**
 * Default tolerance, iteration cap and stall window.
 */
struct PmSolveConfig pm_solve_config_default(void);

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `len`) and returns the full message length.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t pm_last_error_message(char *buf, size_t len);

/**
 * Draws an instance with a random unit signal.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum PmStatus pm_instance_new(uint64_t seed, size_t n, size_t m, struct PmInstance **out);

/**
 * Draws an instance for the given signal of length `n`; the signal is
 * normalized.
 *
 * # Safety
 * `z_re` and `z_im` must point to `n` readable doubles, `out` to writable
 * storage for one handle.
 */
enum PmStatus pm_instance_new_with_signal(uint64_t seed,
                                          size_t n,
                                          size_t m,
                                          const double *z_re,
                                          const double *z_im,
                                          struct PmInstance **out);

/**
 * Releases an instance; null is ignored.
 *
 * # Safety
 * `inst` must be null or a handle from this library not yet freed.
 */
void pm_instance_free(struct PmInstance *inst);

/**
 * Signal dimension, or 0 for a null handle.
 *
 * # Safety
 * `inst` must be null or a live handle.
 */
size_t pm_instance_n(const struct PmInstance *inst);

/**
 * Measurement count, or 0 for a null handle.
 *
 * # Safety
 * `inst` must be null or a live handle.
 */
size_t pm_instance_m(const struct PmInstance *inst);

/**
 * Copies the `m` magnitudes into `y`.
 *
 * # Safety
 * `inst` must be a live handle and `y` point to `len` writable doubles.
 */
enum PmStatus pm_instance_measurements(const struct PmInstance *inst, double *y, size_t len);

/**
 * Copies the unit signal `z` (length `n`).
 *
 * # Safety
 * `inst` must be a live handle, `re` and `im` point to `len` writable doubles.
 */
enum PmStatus pm_instance_signal(const struct PmInstance *inst, double *re, double *im, size_t len);

/**
 * Solves from a random unit initial iterate drawn from `init_seed`. A null
 * `cfg` selects the defaults. When `x_re`/`x_im` are non-null the final
 * estimate (length `n`) is written there.
 *
 * # Safety
 * Pointers must be null or valid for the documented lengths.
 */
enum PmStatus pm_solve(const struct PmInstance *inst,
                       uint64_t init_seed,
                       const struct PmSolveConfig *cfg,
                       struct PmSolveReport *report,
                       double *x_re,
                       double *x_im);

/**
 * Solves from the given initial iterate `w1` of length `m`, used as
 * given; normally a unit vector in the range of the instance.
 *
 * # Safety
 * Pointers must be null or valid for the documented lengths.
 */
enum PmStatus pm_solve_from(const struct PmInstance *inst,
                            const double *w_re,
                            const double *w_im,
                            size_t len,
                            const struct PmSolveConfig *cfg,
                            struct PmSolveReport *report,
                            double *x_re,
                            double *x_im);

/**
 * `min_psi ||e^{i psi} x - z||` for vectors of length `len`.
 *
 * # Safety
 * Input arrays must hold `len` doubles each; `out` must be writable.
 */
enum PmStatus pm_dist_up_to_phase(const double *x_re,
                                  const double *x_im,
                                  const double *z_re,
                                  const double *z_im,
                                  size_t len,
                                  double *out);

/**
 * Monte Carlo estimate of `f(c)` and `g(c)` for `0 <= c < 1`.
 *
 * # Safety
 * `out` must be writable.
 */
enum PmStatus pm_estimate_fg(double c, size_t n_samples, uint64_t seed, struct PmFgEstimate *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PHASEMIN_H */
