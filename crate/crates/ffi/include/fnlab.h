#ifndef FNLAB_H
#define FNLAB_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FnlabMethod {
  FNLAB_METHOD_BERNOULLI_SERIES = 0,
  FNLAB_METHOD_LAGUERRE_SERIES = 1,
  FNLAB_METHOD_EULERIAN_CLOSED = 2,
  FNLAB_METHOD_HERMITE_INTEGRAL = 3,
} FnlabMethod;

typedef enum FnlabSign {
  FNLAB_SIGN_POSITIVE = 1,
  FNLAB_SIGN_NEGATIVE = -1,
  FNLAB_SIGN_INDETERMINATE = 0,
} FnlabSign;

typedef enum FnlabStatus {
  FNLAB_STATUS_OK = 0,
  FNLAB_STATUS_NULL_POINTER = 1,
  FNLAB_STATUS_DOMAIN = 2,
  FNLAB_STATUS_TRUNCATION = 3,
  FNLAB_STATUS_CONVERGENCE = 4,
  FNLAB_STATUS_CONSISTENCY = 5,
  FNLAB_STATUS_PARSE = 6,
  FNLAB_STATUS_IO = 7,
  FNLAB_STATUS_INTERNAL = 99,
} FnlabStatus;

// Precision settings plus the last error message.
typedef struct FnlabContext FnlabContext;

// A value with its absolute error bound and sign classification.
typedef struct FnlabValue FnlabValue;

// Cell counts of a positivity scan.
typedef struct FnlabScanCounts {
  uint64_t positive;
  uint64_t negative;
  uint64_t indeterminate;
  uint64_t anomalies;
} FnlabScanCounts;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Create a context with `target_bits` of target precision (at least 24).
enum FnlabStatus fnlab_context_new(uint32_t target_bits, struct FnlabContext **out);

void fnlab_context_free(struct FnlabContext *ctx);

// Message of the last failed call on `ctx`, or NULL. Owned by the context.
const char *fnlab_last_error(const struct FnlabContext *ctx);

// `f_n(x)` by one method. `tol` is the absolute truncation tolerance for the
// series and quadrature methods and is ignored by the closed form.
enum FnlabStatus fnlab_eval(const struct FnlabContext *ctx,
                            enum FnlabMethod method,
                            uint32_t n,
                            const char *x,
                            double tol,
                            struct FnlabValue **out);

// Cross-checked `f_n(x)`; returns `FNLAB_STATUS_CONSISTENCY` if two rigorous
// methods disagree.
enum FnlabStatus fnlab_consensus(const struct FnlabContext *ctx,
                                 uint32_t n,
                                 const char *x,
                                 double tol,
                                 struct FnlabValue **out);

// `ψ^{(order)}(x)` for x > 0.
enum FnlabStatus fnlab_polygamma(const struct FnlabContext *ctx,
                                 uint32_t order,
                                 const char *x,
                                 struct FnlabValue **out);

// Positivity scan of n = 0..=n_max on `count` uniform points in `(x_min, x_max]`.
enum FnlabStatus fnlab_scan(const struct FnlabContext *ctx,
                            uint32_t n_max,
                            const char *x_min,
                            const char *x_max,
                            uint32_t count,
                            double rel_tol,
                            struct FnlabScanCounts *out);

// Round-trip-exact decimal string of the value; free with [`fnlab_string_free`].
char *fnlab_value_string(const struct FnlabValue *v);

// Decimal string of the error bound; free with [`fnlab_string_free`].
char *fnlab_value_error_bound(const struct FnlabValue *v);

// Nearest double to the value (NaN for a null handle).
double fnlab_value_f64(const struct FnlabValue *v);

enum FnlabSign fnlab_value_sign(const struct FnlabValue *v);

void fnlab_value_free(struct FnlabValue *v);

void fnlab_string_free(char *s);

// Static version string.
const char *fnlab_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FNLAB_H */
