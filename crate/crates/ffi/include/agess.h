#ifndef AGESS_H
#define AGESS_H

/* Generated by cbindgen from the agess-ffi crate; do not edit. */

#include <stddef.h>
#include <stdint.h>

/**
 * Result code of every call.
 */
typedef enum AgessStatus {
  AGESS_STATUS_OK = 0,
  AGESS_STATUS_NULL_POINTER = 1,
  AGESS_STATUS_INVALID_ARGUMENT = 2,
  AGESS_STATUS_NOT_POSITIVE_DEFINITE = 3,
  AGESS_STATUS_NUMERICAL = 4,
  AGESS_STATUS_CHAIN_INIT = 5,
  AGESS_STATUS_SHRINKAGE_LIMIT = 6,
  /**
   * The run stopped early; the partial trace is still returned.
   */
  AGESS_STATUS_SAMPLING_ABORT = 7,
  AGESS_STATUS_DIAGNOSTICS = 8,
  AGESS_STATUS_CONTRACT = 9,
  AGESS_STATUS_IO = 10,
  AGESS_STATUS_PANIC = 11,
} AgessStatus;

/**
 * Proposal family selector for [`AgessConfig`].
 */
typedef enum AgessFamily {
  AGESS_FAMILY_GAUSSIAN = 0,
  /**
   * `param_a` is the degrees of freedom.
   */
  AGESS_FAMILY_STUDENT_T = 1,
  /**
   * `param_a` is `m`, `param_b` the joint-space exponent.
   */
  AGESS_FAMILY_PEARSON_VII = 2,
} AgessFamily;

/**
 * Reference-update variant for [`AgessConfig`].
 */
typedef enum AgessVariant {
  AGESS_VARIANT_FULL_COVARIANCE = 0,
  AGESS_VARIANT_SCALAR_SCALE = 1,
} AgessVariant;

/**
 * Opaque log-density handle.
 */
typedef struct AgessTarget AgessTarget;

/**
 * Opaque chain handle.
 */
typedef struct AgessTrace AgessTrace;

/**
 * Log-density callback: `user_data`, the state and its length.
 */
typedef double (*AgessLogDensityFn)(void *user_data, const double *x, size_t dim);

/**
 * Settings of an adaptive run. Fill with [`agess_config_default`].
 */
typedef struct AgessConfig {
  size_t iterations;
  size_t burn_in;
  enum AgessFamily family;
  double param_a;
  double param_b;
  enum AgessVariant variant;
  double beta;
  double eps_a;
  double eps_b;
  double burn_1d_fraction;
  /**
   * Non-positive selects the dimension-dependent default.
   */
  double weight_exponent;
  /**
   * Zero disables adaptation.
   */
  int32_t adapt;
  uint64_t seed;
} AgessConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * Valid until the next call on this thread.
 */
const char *agess_last_error(void);

/**
 * Library version as a static string.
 */
const char *agess_version(void);

/**
 * Gaussian target `N(mean, cov)`; `cov` is row-major `dim x dim`.
 */
enum AgessStatus agess_target_gaussian(size_t dim,
                                       const double *mean,
                                       const double *cov,
                                       struct AgessTarget **out);

/**
 * Volcano target in `dim` dimensions.
 */
enum AgessStatus agess_target_volcano(size_t dim, struct AgessTarget **out);

/**
 * Target defined by a callback. `user_data` must stay valid until the
 * handle is freed; a NaN return is treated as minus infinity.
 */
enum AgessStatus agess_target_callback(size_t dim,
                                       AgessLogDensityFn log_density,
                                       void *user_data,
                                       struct AgessTarget **out);

void agess_target_free(struct AgessTarget *target);

size_t agess_target_dim(const struct AgessTarget *target);

/**
 * Evaluates the target at `x` (length `dim`).
 */
enum AgessStatus agess_target_log_density(const struct AgessTarget *target,
                                          const double *x,
                                          double *out);

/**
 * Default settings for a `dim`-dimensional run.
 */
enum AgessStatus agess_config_default(size_t dim,
                                      size_t iterations,
                                      size_t burn_in,
                                      struct AgessConfig *out);

/**
 * Adaptive run from `init`. `mu0` defaults to zero and `sigma0` (row-major)
 * to the identity when null.
 */
enum AgessStatus agess_run(const struct AgessTarget *target,
                           const struct AgessConfig *config,
                           const double *init,
                           const double *mu0,
                           const double *sigma0,
                           struct AgessTrace **out);

/**
 * Elliptical slice sampling with prior `N(prior_mean, prior_cov)`; null
 * arguments mean zero mean and identity covariance.
 */
enum AgessStatus agess_run_ess(const struct AgessTarget *target,
                               const double *prior_mean,
                               const double *prior_cov,
                               const double *init,
                               size_t iterations,
                               size_t burn_in,
                               uint64_t seed,
                               struct AgessTrace **out);

/**
 * Adaptive random-walk Metropolis; null `initial_cov` means the identity.
 */
enum AgessStatus agess_run_arw(const struct AgessTarget *target,
                               const double *initial_cov,
                               const double *init,
                               size_t iterations,
                               size_t burn_in,
                               uint64_t seed,
                               struct AgessTrace **out);

void agess_trace_free(struct AgessTrace *trace);

/**
 * Number of stored states, the initial state included.
 */
size_t agess_trace_len(const struct AgessTrace *trace);

size_t agess_trace_dim(const struct AgessTrace *trace);

/**
 * Copies the states row-major into `buf`, which must hold `len * dim` values.
 */
enum AgessStatus agess_trace_states(const struct AgessTrace *trace, double *buf, size_t buf_len);

/**
 * Copies the per-transition loop counts (`len - 1` values) into `buf`.
 */
enum AgessStatus agess_trace_loop_counts(const struct AgessTrace *trace,
                                         uint64_t *buf,
                                         size_t buf_len);

double agess_trace_mean_loop_count(const struct AgessTrace *trace);

/**
 * Multivariate effective sample size of the post-burn-in states.
 */
enum AgessStatus agess_trace_mess(const struct AgessTrace *trace, double *out);

/**
 * Multivariate effective sample size of `n x p` row-major samples.
 */
enum AgessStatus agess_multivariate_ess(const double *data, size_t n, size_t p, double *out);

/**
 * Multivariate scale reduction factor of `chains` blocks of `n x p`
 * row-major samples stored back to back.
 */
enum AgessStatus agess_gelman_rubin(const double *data,
                                    size_t chains,
                                    size_t n,
                                    size_t p,
                                    double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AGESS_H */
