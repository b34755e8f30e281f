#ifndef ORLICZ_EMBED_H
#define ORLICZ_EMBED_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum OrlStatus {
  ORL_STATUS_OK = 0,
  ORL_STATUS_NULL_POINTER = 1,
  ORL_STATUS_INVALID_INPUT = 2,
  ORL_STATUS_NOT_CONVEX = 3,
  ORL_STATUS_DOMAIN_EXCEEDED = 4,
  ORL_STATUS_NOT_NORMALIZED = 5,
  ORL_STATUS_NOT_TWO_CONCAVE = 6,
  ORL_STATUS_DEGENERATE_PROFILE = 7,
  ORL_STATUS_NOT_DECREASING = 8,
  ORL_STATUS_NOT_POSITIVE = 9,
  ORL_STATUS_LENGTH_MISMATCH = 10,
  ORL_STATUS_TOO_LARGE_FOR_EXACT = 11,
  ORL_STATUS_NUMERICAL_FAILURE = 12,
  ORL_STATUS_PANIC = 13,
} OrlStatus;

/**
 * The dual `M*` of an Orlicz function.
 */
typedef struct OrlDual OrlDual;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * The dual of `|t|^p`, `1 ≤ p ≤ 2`; with `normalized` the argument is
 * rescaled so that `M*(1) = 1`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum OrlStatus orl_dual_power(double p, bool normalized, struct OrlDual **out);

/**
 * The piecewise-affine dual whose inverse has knots built from the
 * nonincreasing positive weights `a[0..len]`.
 *
 * # Safety
 * `a` must point to `len` readable doubles and `out` to writable storage
 * for one handle.
 */
enum OrlStatus orl_dual_from_weights(const double *a, size_t len, struct OrlDual **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `d` must be null or a handle returned by this library that has not been
 * freed.
 */
void orl_dual_free(struct OrlDual *d);

/**
 * `M*(t)`.
 *
 * # Safety
 * `d` must be a live handle and `out` a valid pointer.
 */
enum OrlStatus orl_dual_eval(const struct OrlDual *d, double t, double *out);

/**
 * `(M*)^{-1}(v)`, `v ≥ 0`.
 *
 * # Safety
 * `d` must be a live handle and `out` a valid pointer.
 */
enum OrlStatus orl_dual_inverse(const struct OrlDual *d, double v, double *out);

/**
 * `sup { Σ x_i y_i : Σ M*(y_i) ≤ 1 }`.
 *
 * # Safety
 * `d` must be a live handle, `x` must point to `len` readable doubles and
 * `out` must be a valid pointer.
 */
enum OrlStatus orl_orlicz_norm(const struct OrlDual *d, const double *x, size_t len, double *out);

/**
 * Luxemburg norm of `x` for `M(t) = |t|^p`, `1 ≤ p ≤ 2`.
 *
 * # Safety
 * `x` must point to `len` readable doubles and `out` must be a valid pointer.
 */
enum OrlStatus orl_luxemburg_power(double p, const double *x, size_t len, double *out);

/**
 * Weights `a_1 ≥ … ≥ a_n` generated from `|t|^p` normalized so that
 * `M*(1) = 1`; `1 < p < 2`.
 *
 * # Safety
 * `out` must point to `n` writable doubles.
 */
enum OrlStatus orl_weights_from_power(double p, size_t n, double *out);

/**
 * The exact average over all permutations `π` of `(Σ_i |x_i a_{π(i)}|²)^{1/2}`.
 *
 * # Safety
 * `x` and `a` must each point to `len` readable doubles and `out` must be a
 * valid pointer.
 */
enum OrlStatus orl_ave_quadratic_exact(const double *x, const double *a, size_t len, double *out);

/**
 * `1 − 1/2! + 1/3! − … + (−1)^{n+1}/n!`.
 */
double orl_c_n(size_t n);

/**
 * Why the most recent call on this thread failed; empty after a successful
 * call. Valid until the next call into this library on the same thread.
 */
const char *orl_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ORLICZ_EMBED_H */
