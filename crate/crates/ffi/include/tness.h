#ifndef TNESS_H
#define TNESS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define TNESS_OK 0

#define TNESS_ERR_NULL_POINTER -1

#define TNESS_ERR_DOMAIN -2

#define TNESS_ERR_INSUFFICIENT_DATA -3

#define TNESS_ERR_DEGENERATE -4

#define TNESS_ERR_SINGULAR -5

#define TNESS_ERR_NONCONVERGENCE -6

#define TNESS_ERR_QUADRATURE -7

#define TNESS_ERR_INVALID_CONFIG -8

#define TNESS_ERR_PARSE -9

#define TNESS_ERR_IO -10

#define TNESS_ERR_PANIC -11

/**
 * Opaque estimand handle.
 */
typedef struct TnessEstimand TnessEstimand;

/**
 * Opaque compromise-rule handle.
 */
typedef struct TnessRule TnessRule;

/**
 * Opaque simulation report.
 */
typedef struct TnessSimReport TnessSimReport;

/**
 * Result of an i.i.d. fit. `m` is `1/gamma`, `INFINITY` at the corner.
 */
typedef struct {
  double xi;
  double sigma;
  double gamma;
  double m;
  double loglik;
  bool at_corner;
  bool converged;
  uint64_t n_iter;
} TnessFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last error on this thread, or NULL. Valid until the next
 * failing call on the same thread.
 */
const char *tness_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *tness_version(void);

/**
 * Normal-model ML fit of `n` observations.
 *
 * # Safety
 * `data` must point to `n` doubles and `out` to a writable `TnessFit`.
 */
int32_t tness_fit_narrow(const double *data, size_t n, TnessFit *out);

/**
 * t-model ML fit with `gamma >= 0`. On non-convergence the best iterate is
 * still written to `out` and `TNESS_ERR_NONCONVERGENCE` returned.
 *
 * # Safety
 * As for [`tness_fit_narrow`].
 */
int32_t tness_fit_wide(const double *data, size_t n, TnessFit *out);

/**
 * Parses `mean`, `sd`, `mad`, `quantile[:p]` or `prob:y`.
 *
 * # Safety
 * `spec` must be a NUL-terminated string and `out` writable.
 */
int32_t tness_estimand_new(const char *spec, TnessEstimand **out);

/**
 * # Safety
 * `e` must come from [`tness_estimand_new`] and not be used afterwards.
 */
void tness_estimand_free(TnessEstimand *e);

/**
 * Parses `narrow`, `wide`, `ratio`, `eb`, `vague`, `bayes:tau`, `pre[:d]` or `lim[:d]`.
 *
 * # Safety
 * `spec` must be a NUL-terminated string and `out` writable.
 */
int32_t tness_rule_new(const char *spec, TnessRule **out);

/**
 * # Safety
 * `r` must come from [`tness_rule_new`] and not be used afterwards.
 */
void tness_rule_free(TnessRule *r);

/**
 * Compromise estimate `mu*` of an estimand from `n` observations.
 *
 * # Safety
 * `data` must point to `n` doubles; handles must be live; `out` writable.
 */
int32_t tness_compromise_estimate(const double *data,
                                  size_t n,
                                  const TnessEstimand *estimand,
                                  const TnessRule *rule,
                                  double *out);

/**
 * Limiting risk `R(a)` of a rule.
 *
 * # Safety
 * `rule` must be live and `out` writable.
 */
int32_t tness_risk(const TnessRule *rule, double a, double *out);

/**
 * Tolerance threshold `a*`, `delta*` and the coefficient in `m >= coeff·√n`.
 * Any out-pointer may be NULL.
 *
 * # Safety
 * Non-NULL pointers must be writable.
 */
int32_t tness_threshold(double *a_star, double *delta_star, double *m_coeff);

/**
 * # Safety
 * `out` must be writable.
 */
int32_t tness_t_cdf(double x, double m, double *out);

/**
 * # Safety
 * `out` must be writable.
 */
int32_t tness_t_quantile(double p, double m, double *out);

/**
 * Runs a simulation described by a JSON `SimConfig`. Fields other than
 * `kind`, `n`, `delta`, `replicates` and `seed` are optional.
 *
 * # Safety
 * `config_json` must be a NUL-terminated string and `out` writable.
 */
int32_t tness_simulate(const char *config_json, TnessSimReport **out);

/**
 * The report as JSON, owned by the handle.
 *
 * # Safety
 * `r` must be live.
 */
const char *tness_sim_report_json(const TnessSimReport *r);

/**
 * Corner frequency, or NaN when the run did not record one.
 *
 * # Safety
 * `r` must be live.
 */
double tness_sim_report_corner_freq(const TnessSimReport *r);

/**
 * # Safety
 * `r` must come from [`tness_simulate`] and not be used afterwards.
 */
void tness_sim_report_free(TnessSimReport *r);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TNESS_H */
