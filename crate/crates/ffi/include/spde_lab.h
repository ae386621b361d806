#ifndef SPDE_LAB_H
#define SPDE_LAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Integrator selector for [`spde_run_path`] and [`spde_positivity_census`].
 */
typedef enum SpdeIntegrator {
  SPDE_INTEGRATOR_LT = 0,
  SPDE_INTEGRATOR_EM = 1,
  SPDE_INTEGRATOR_SEM = 2,
  SPDE_INTEGRATOR_SEXP = 3,
} SpdeIntegrator;

/**
 * Coefficient selector for [`spde_nonlinearity_new`].
 */
typedef enum SpdeNonlinearityKind {
  SPDE_NONLINEARITY_KIND_LINEAR = 0,
  SPDE_NONLINEARITY_KIND_RATIONAL = 1,
  SPDE_NONLINEARITY_KIND_SINE_PLUS = 2,
  SPDE_NONLINEARITY_KIND_LOG1P = 3,
  SPDE_NONLINEARITY_KIND_ZERO = 4,
} SpdeNonlinearityKind;

typedef enum SpdeStatus {
  SPDE_STATUS_OK = 0,
  SPDE_STATUS_NULL_POINTER = 1,
  SPDE_STATUS_INVALID_ARGUMENT = 2,
  SPDE_STATUS_LENGTH_MISMATCH = 3,
  SPDE_STATUS_POSITIVITY_VIOLATION = 4,
  SPDE_STATUS_SIZE_CAP = 5,
  SPDE_STATUS_IO = 6,
  SPDE_STATUS_INTERNAL = 7,
  SPDE_STATUS_PANIC = 8,
} SpdeStatus;

/**
 * Opaque noise coefficient.
 */
typedef struct SpdeNonlinearity SpdeNonlinearity;

/**
 * Opaque discrete heat operator on a fixed grid.
 */
typedef struct SpdeOperator SpdeOperator;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failing call on this thread, or an empty string.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *spde_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *spde_version(void);

/**
 * Creates the operator for `dim` (1 or 2) and `n` subdivisions per axis.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum SpdeStatus spde_operator_new(size_t dim, size_t n, struct SpdeOperator **out);

/**
 * # Safety
 * `op` must come from [`spde_operator_new`] and not be used afterwards.
 */
void spde_operator_free(struct SpdeOperator *op);

/**
 * Number of interior grid values, `(n-1)^dim`; 0 for a null handle.
 *
 * # Safety
 * `op` must be null or a live handle.
 */
size_t spde_operator_len(const struct SpdeOperator *op);

/**
 * `out = N^2 D^N v`.
 *
 * # Safety
 * `v` and `out` must each point to `len` doubles.
 */
enum SpdeStatus spde_apply_laplacian(const struct SpdeOperator *op,
                                     const double *v,
                                     size_t len,
                                     double *out);

/**
 * `out = exp(tau N^2 D^N) v`.
 *
 * # Safety
 * `v` and `out` must each point to `len` doubles.
 */
enum SpdeStatus spde_apply_semigroup(const struct SpdeOperator *op,
                                     double tau,
                                     const double *v,
                                     size_t len,
                                     double *out);

/**
 * Solves `(I - tau N^2 D^N) out = b`.
 *
 * # Safety
 * `b` and `out` must each point to `len` doubles.
 */
enum SpdeStatus spde_solve_implicit(const struct SpdeOperator *op,
                                    double tau,
                                    const double *b,
                                    size_t len,
                                    double *out);

/**
 * Creates a catalogue coefficient; `kind` is a [`SpdeNonlinearityKind`].
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum SpdeStatus spde_nonlinearity_new(uint32_t kind, double lambda, struct SpdeNonlinearity **out);

/**
 * # Safety
 * `g` must come from [`spde_nonlinearity_new`] and not be used afterwards.
 */
void spde_nonlinearity_free(struct SpdeNonlinearity *g);

/**
 * `*out = g(v)`.
 *
 * # Safety
 * `g` must be a live handle and `out` writable.
 */
enum SpdeStatus spde_eval_g(const struct SpdeNonlinearity *g, double v, double *out);

/**
 * `*out = f(v)`, with `f(v) v = g(v)` and `f(0) = g'(0)`.
 *
 * # Safety
 * `g` must be a live handle and `out` writable.
 */
enum SpdeStatus spde_eval_f(const struct SpdeNonlinearity *g, double v, double *out);

/**
 * Writes the `2^level` Brownian increments of sample `sample` on
 * `[0, horizon]`.
 *
 * # Safety
 * `out` must point to `len` doubles, and `len` must equal `2^level`.
 */
enum SpdeStatus spde_brownian_increments(double horizon,
                                         uint32_t level,
                                         uint64_t seed,
                                         uint64_t sample,
                                         double *out,
                                         size_t len);

/**
 * Runs one integrator (a [`SpdeIntegrator`]) over `steps` increments from
 * `u0`, writing the final field to `final_out`, the smallest entry seen to
 * `running_min` (NaN after divergence) and the divergence flag to
 * `diverged`. `running_min` and `diverged` may be null.
 *
 * # Safety
 * `u0` and `final_out` must point to `len` doubles and `increments` to
 * `steps` doubles.
 */
enum SpdeStatus spde_run_path(const struct SpdeOperator *op,
                              const struct SpdeNonlinearity *g,
                              uint32_t integrator_kind,
                              double tau,
                              const double *u0,
                              size_t len,
                              const double *increments,
                              size_t steps,
                              double *final_out,
                              double *running_min,
                              bool *diverged);

/**
 * Positivity census for one coefficient and one integrator with the sine
 * initial datum: `samples` paths with step `horizon / 2^level`. Writes the
 * count of entrywise nonnegative paths and of diverged paths.
 *
 * # Safety
 * `positive` and `diverged` must be writable.
 */
enum SpdeStatus spde_positivity_census(size_t dim,
                                       size_t n,
                                       double horizon,
                                       uint32_t level,
                                       uint32_t nonlinearity,
                                       double lambda,
                                       uint32_t integrator_kind,
                                       size_t samples,
                                       uint64_t seed,
                                       size_t *positive,
                                       size_t *diverged);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPDE_LAB_H */
