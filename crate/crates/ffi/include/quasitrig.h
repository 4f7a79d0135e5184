#ifndef QUASITRIG_H
#define QUASITRIG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  QT_STATUS_OK = 0,
  QT_STATUS_NULL_POINTER = 1,
  QT_STATUS_INVALID_ARGUMENT = 2,
  QT_STATUS_NOT_EXPANDING = 3,
  QT_STATUS_DOMAIN = 4,
  QT_STATUS_WRONG_HALF_SPACE = 5,
  QT_STATUS_OVERFLOW = 6,
  QT_STATUS_NO_CONVERGENCE = 7,
  QT_STATUS_INADMISSIBLE = 8,
  QT_STATUS_PARSE = 9,
  QT_STATUS_IO = 10,
  QT_STATUS_BUFFER_TOO_SMALL = 11,
  QT_STATUS_NUMERICAL = 12,
  QT_STATUS_PANIC = 13,
} QtStatus;

/**
 * Admissible itinerary.
 */
typedef struct QtItinerary QtItinerary;

/**
 * Validated map parameters.
 */
typedef struct QtParams QtParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len - 1` bytes). Returns the full message length.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t qt_last_error_message(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *qt_version(void);

/**
 * `beta_hat` from `samples` finite-difference Jacobians.
 *
 * # Safety
 * `out` must be valid for one write.
 */
QtStatus qt_estimate_beta(size_t dim, size_t samples, uint64_t seed, double *out);

/**
 * Creates parameters for `f = lambda F`; fails with `NotExpanding` when
 * `lambda * beta_hat <= 1`.
 *
 * # Safety
 * `out` must be valid for one write. The handle is released with
 * [`qt_params_free`].
 */
QtStatus qt_params_new(size_t dim, double lambda, double beta_hat, QtParams **out);

/**
 * Estimates `beta_hat` and sets `lambda = 1.1 / beta_hat`.
 *
 * # Safety
 * As [`qt_params_new`].
 */
QtStatus qt_params_auto(size_t dim, size_t samples, uint64_t seed, QtParams **out);

/**
 * Sets the ordering constant `M` (raised to `max{e, 4 lambda}` if lower).
 *
 * # Safety
 * `p` must be a live handle from this library.
 */
QtStatus qt_params_set_m(QtParams *p, double m);

/**
 * # Safety
 * `p` must be null or a handle from this library not yet freed.
 */
void qt_params_free(QtParams *p);

/**
 * Dimension, or 0 for a null handle.
 *
 * # Safety
 * `p` must be null or a live handle.
 */
size_t qt_params_dim(const QtParams *p);

/**
 * `lambda`, or NaN for a null handle.
 *
 * # Safety
 * `p` must be null or a live handle.
 */
double qt_params_lambda(const QtParams *p);

/**
 * `alpha_hat = lambda * beta_hat`, or NaN for a null handle.
 *
 * # Safety
 * `p` must be null or a live handle.
 */
double qt_params_alpha(const QtParams *p);

/**
 * `M`, or NaN for a null handle.
 *
 * # Safety
 * `p` must be null or a live handle.
 */
double qt_params_m(const QtParams *p);

/**
 * `out = f(x)`; `x` and `out` hold `dim` values.
 *
 * # Safety
 * `x` and `out` must be valid for `dim` values.
 */
QtStatus qt_f(const QtParams *p, const double *x, size_t dim, double *out);

/**
 * Tray of `x`: `lateral_out` receives `dim - 1` indices, `sign_out` the
 * height sign `+1` or `-1`.
 *
 * # Safety
 * `x` valid for `dim` values, `lateral_out` for `dim - 1`, `sign_out` for one.
 */
QtStatus qt_tray_of(const double *x, size_t dim, int64_t *lateral_out, int8_t *sign_out);

/**
 * `out = Lambda^r(y)`, the inverse of `f` on the tray `r = (lateral, sign)`.
 *
 * # Safety
 * `lateral` valid for `dim - 1` values; `y` and `out` for `dim`.
 */
QtStatus qt_lambda_branch(const QtParams *p,
                          const int64_t *lateral,
                          int8_t sign,
                          const double *y,
                          size_t dim,
                          double *out);

/**
 * Forward orbit of `x` for up to `steps` steps.
 *
 * `points_out` holds `capacity` values, at least `(steps + 1) * dim`;
 * `len_out` receives the number of points written and `escape_out` the
 * escape step, or `-1`.
 *
 * # Safety
 * `x` valid for `dim` values, `points_out` for `capacity`, the others for one.
 */
QtStatus qt_iterate(const QtParams *p,
                    const double *x,
                    size_t dim,
                    size_t steps,
                    double height_cap,
                    double *points_out,
                    size_t capacity,
                    size_t *len_out,
                    int64_t *escape_out);

/**
 * Parses an itinerary from JSON, e.g.
 * `{"dim":2,"prefix":[],"cycle":[[[0],1]]}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` valid for one write. The
 * handle is released with [`qt_itinerary_free`].
 */
QtStatus qt_itinerary_from_json(const char *json, QtItinerary **out);

/**
 * # Safety
 * `it` must be null or a handle from this library not yet freed.
 */
void qt_itinerary_free(QtItinerary *it);

/**
 * Dimension of an itinerary, or 0 for a null handle.
 *
 * # Safety
 * `it` must be null or a live handle.
 */
size_t qt_itinerary_dim(const QtItinerary *it);

/**
 * Endpoint estimate of the hair with itinerary `it`.
 *
 * # Safety
 * `point_out` valid for `dim` values, `residual_out` and `depth_out` for one.
 */
QtStatus qt_endpoint(const QtParams *p,
                     const QtItinerary *it,
                     double tol,
                     size_t max_depth,
                     double *point_out,
                     double *residual_out,
                     size_t *depth_out);

/**
 * Samples the hair at `n_samples` anchor heights in `[0, t_max]`.
 *
 * `t_out` receives `n_samples` values; `points_out` holds `capacity`
 * values, at least `n_samples * dim`.
 *
 * # Safety
 * `t_out` valid for `n_samples` values, `points_out` for `capacity`.
 */
QtStatus qt_hair_trace(const QtParams *p,
                       const QtItinerary *it,
                       size_t depth,
                       double t_max,
                       size_t n_samples,
                       double *t_out,
                       double *points_out,
                       size_t capacity);

/**
 * Renders the `(x_1, x_d)` slice (other coordinates 0) and writes a binary
 * PPM. `window` holds `u_min, u_max, v_min, v_max`.
 *
 * # Safety
 * `window` valid for 4 values; `path` a NUL-terminated UTF-8 path.
 */
QtStatus qt_render_ppm(const QtParams *p,
                       const double *window,
                       size_t width,
                       size_t height,
                       size_t max_iter,
                       double height_cap,
                       const char *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QUASITRIG_H */
