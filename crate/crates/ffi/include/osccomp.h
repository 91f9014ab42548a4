#ifndef OSCCOMP_H
#define OSCCOMP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum OscStatus {
  OSC_STATUS_OK = 0,
  OSC_STATUS_NULL_POINTER = 1,
  OSC_STATUS_INVALID_ARGUMENT = 2,
  OSC_STATUS_CONFIG = 3,
  OSC_STATUS_NUMERICAL_BLOWUP = 4,
  OSC_STATUS_POLE_ON_AXIS = 5,
  OSC_STATUS_FREQUENCY_TOO_LOW = 6,
  OSC_STATUS_NOT_READY = 7,
  OSC_STATUS_IO = 8,
  OSC_STATUS_TRACE_FORMAT = 9,
  OSC_STATUS_BUFFER_TOO_SMALL = 10,
  OSC_STATUS_PANIC = 11,
  OSC_STATUS_INTERNAL = 12,
} OscStatus;

/**
 * Online biased-harmonic estimator handle.
 */
typedef struct OscEstimator OscEstimator;

/**
 * Simulation trace handle.
 */
typedef struct OscTrace OscTrace;

typedef struct OscEstimate {
  double omega_hat;
  double a_hat;
  double y0_hat;
  double phi_hat;
  /**
   * Nonzero once the delay line spans three delays.
   */
  int32_t ready;
} OscEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, static storage.
 */
const char *osc_version(void);

/**
 * Message for the last failing call on this thread; empty after a success.
 * Valid until the next call on the same thread.
 */
const char *osc_last_error_message(void);

/**
 * Runs a scenario. `scenario` and `config_toml` may be null; `overrides`
 * holds `n_overrides` strings of the form `dotted.key=value`. A run cut
 * short by numerical blowup still succeeds; see `osc_trace_truncated_at`.
 *
 * # Safety
 * String arguments must be null or nul-terminated; `overrides` must hold
 * `n_overrides` valid strings; `out` must be writable.
 */
enum OscStatus osc_run_scenario(const char *scenario,
                                const char *config_toml,
                                const char *const *overrides,
                                size_t n_overrides,
                                struct OscTrace **out);

/**
 * # Safety
 * `path` must be nul-terminated; `out` must be writable.
 */
enum OscStatus osc_trace_read(const char *path, struct OscTrace **out);

/**
 * # Safety
 * `trace` must come from this library and not be used afterwards. Null is ignored.
 */
void osc_trace_free(struct OscTrace *trace);

/**
 * # Safety
 * `trace` must be a live handle; `path` nul-terminated.
 */
enum OscStatus osc_trace_write(const struct OscTrace *trace, const char *path);

/**
 * # Safety
 * `trace` must be a live handle; `out` writable.
 */
enum OscStatus osc_trace_rows(const struct OscTrace *trace, size_t *out);

/**
 * Copies column `name` into `buf`. `*written` receives the row count; if
 * `cap` is smaller, nothing is copied and `BufferTooSmall` is returned.
 *
 * # Safety
 * `trace` must be a live handle, `name` nul-terminated, `buf` valid for
 * `cap` doubles (may be null when `cap` is 0), `written` writable.
 */
enum OscStatus osc_trace_column(const struct OscTrace *trace,
                                const char *name,
                                double *buf,
                                size_t cap,
                                size_t *written);

/**
 * Metadata value for `key` as text, nul-terminated. `*needed` receives the
 * length including the terminator.
 *
 * # Safety
 * `trace` must be a live handle, `key` nul-terminated, `buf` valid for
 * `cap` bytes (may be null when `cap` is 0), `needed` writable.
 */
enum OscStatus osc_trace_meta(const struct OscTrace *trace,
                              const char *key,
                              char *buf,
                              size_t cap,
                              size_t *needed);

/**
 * `*truncated` is set to 1 and `*at` to the blowup time when the run was
 * cut short, otherwise 0 and NaN.
 *
 * # Safety
 * `trace` must be a live handle; outputs writable.
 */
enum OscStatus osc_trace_truncated_at(const struct OscTrace *trace, int32_t *truncated, double *at);

/**
 * Creates an estimator; `finite_time` nonzero selects the finite-time
 * frequency update, zero the gradient one.
 *
 * # Safety
 * `out` must be writable.
 */
enum OscStatus osc_estimator_new(double tau,
                                 double gamma1,
                                 double gamma2,
                                 int32_t finite_time,
                                 double omega_guess,
                                 double dt,
                                 struct OscEstimator **out);

/**
 * Feeds one sample `y` taken at time `t`.
 *
 * # Safety
 * `est` must be a live handle; `out` may be null.
 */
enum OscStatus osc_estimator_update(struct OscEstimator *est,
                                    double y,
                                    double t,
                                    struct OscEstimate *out);

/**
 * # Safety
 * `est` must come from this library and not be used afterwards. Null is ignored.
 */
void osc_estimator_free(struct OscEstimator *est);

/**
 * Upper bound `1/|G(j omega)|` on the shaping gain. Coefficients are in
 * descending powers; pass zero lengths for the built-in sub-dynamics.
 *
 * # Safety
 * `num`/`den` must be valid for their lengths; `out` writable.
 */
enum OscStatus osc_gain_bound(const double *num,
                              size_t n_num,
                              const double *den,
                              size_t n_den,
                              double omega,
                              double *out);

/**
 * Compensator delay `(2 pi + arg G(j mult omega_hat)) / omega_hat` on the
 * built-in sub-dynamics, in seconds.
 *
 * # Safety
 * `out` must be writable.
 */
enum OscStatus osc_sync_delay(double omega_hat, double mult, double omega_floor, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OSCCOMP_H */
