#ifndef TRACEKIT_H
#define TRACEKIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  TK_STATUS_OK = 0,
  TK_STATUS_NULL_POINTER = 1,
  TK_STATUS_INVALID_ARGUMENT = 2,
  TK_STATUS_DIMENSION = 3,
  TK_STATUS_NOT_SYMMETRIC = 4,
  TK_STATUS_BUDGET_TOO_SMALL = 5,
  TK_STATUS_SPECTRUM_FLOOR = 6,
  TK_STATUS_IO = 7,
  TK_STATUS_PARSE = 8,
  TK_STATUS_CALLBACK = 9,
  TK_STATUS_PANIC = 10,
} TkStatus;

typedef enum {
  TK_FUNCTION_EXP = 0,
  TK_FUNCTION_LOG = 1,
  TK_FUNCTION_INVERSE = 2,
} TkFunction;

typedef enum {
  TK_ALGORITHM_HUTCHINSON = 0,
  TK_ALGORITHM_HUTCH_PP = 1,
  TK_ALGORITHM_NA_HUTCH_PP = 2,
} TkAlgorithm;

typedef enum {
  TK_DISTRIBUTION_GAUSSIAN = 0,
  TK_DISTRIBUTION_RADEMACHER = 1,
} TkDistribution;

/**
 * Opaque operator handle.
 */
typedef struct TkOperator TkOperator;

/**
 * `y = A x` for one column of length `n`; return 0 on success.
 */
typedef int (*TkApplyFn)(void *user_data, const double *x, double *y, size_t n);

typedef struct {
  double value;
  TkAlgorithm algorithm;
  /**
   * Query columns the oracle served.
   */
  size_t m;
  uint64_t seed;
  size_t adaptive_rounds;
} TkEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Dense symmetric operator from `n * n` column-major values (copied).
 *
 * # Safety
 * `data` must point to `n * n` readable doubles and `out` must be writable.
 */
TkStatus tk_operator_dense(const double *data, size_t n, bool claim_psd, TkOperator **out);

/**
 * Diagonal operator from `n` values (copied).
 *
 * # Safety
 * `diag` must point to `n` readable doubles and `out` must be writable.
 */
TkStatus tk_operator_diagonal(const double *diag, size_t n, TkOperator **out);

/**
 * Sparse symmetric operator read from a Matrix Market file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` must be writable.
 */
TkStatus tk_operator_from_mtx(const char *path, bool claim_psd, TkOperator **out);

/**
 * `base^power`, applied by repeated products. `base` stays owned by the caller.
 *
 * # Safety
 * `base` must be a live handle and `out` must be writable.
 */
TkStatus tk_operator_power(const TkOperator *base, uint32_t power, TkOperator **out);

/**
 * `f(base) x` through `steps` Lanczos iterations. `base` stays owned by the caller.
 *
 * # Safety
 * `base` must be a live handle and `out` must be writable.
 */
TkStatus tk_operator_lanczos(const TkOperator *base,
                             TkFunction function,
                             size_t steps,
                             TkOperator **out);

/**
 * Operator backed by a caller-supplied symmetric product.
 *
 * The callback may be invoked concurrently from several threads and must
 * stay valid, together with `user_data`, until the handle and every handle
 * derived from it are freed.
 *
 * # Safety
 * `out` must be writable and the callback contract above must hold.
 */
TkStatus tk_operator_callback(size_t n,
                              TkApplyFn apply,
                              void *user_data,
                              bool claim_psd,
                              TkOperator **out);

/**
 * Dimension of the operator, or 0 for a null handle.
 *
 * # Safety
 * `op` must be null or a live handle.
 */
size_t tk_operator_dim(const TkOperator *op);

/**
 * `y = A x` for one vector of length `dim`.
 *
 * # Safety
 * `x` and `y` must each point to `dim` doubles and must not overlap.
 */
TkStatus tk_operator_apply(const TkOperator *op, const double *x, double *y);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `op` must be null or a handle not yet freed.
 */
void tk_operator_free(TkOperator *op);

/**
 * Trace estimate with `m` queries. NA-Hutch++ uses the default split.
 *
 * # Safety
 * `op` must be a live handle and `out` must be writable.
 */
TkStatus tk_estimate_trace(const TkOperator *op,
                           TkAlgorithm algorithm,
                           size_t m,
                           TkDistribution dist,
                           uint64_t seed,
                           TkEstimate *out);

/**
 * NA-Hutch++ with an explicit split `(c1, c2, c3)`.
 *
 * # Safety
 * `op` must be a live handle and `out` must be writable.
 */
TkStatus tk_na_hutch_pp(const TkOperator *op,
                        size_t m,
                        double c1,
                        double c2,
                        double c3,
                        TkDistribution dist,
                        uint64_t seed,
                        TkEstimate *out);

/**
 * Recommended NA-Hutch++ budget for relative error `epsilon` with failure
 * probability `delta`.
 *
 * # Safety
 * `out_m` must be writable.
 */
TkStatus tk_query_budget(double epsilon, double delta, size_t *out_m);

/**
 * Message for the last failed call on this thread, or null. Free with
 * [`tk_string_free`].
 */
char *tk_last_error_message(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library and not yet freed.
 */
void tk_string_free(char *s);

/**
 * Library version as a static NUL-terminated string.
 */
const char *tk_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TRACEKIT_H */
