#ifndef EGPD_LASSO_H
#define EGPD_LASSO_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum EgpdStatus {
  EGPD_STATUS_OK = 0,
  EGPD_STATUS_NULL_POINTER = 1,
  EGPD_STATUS_DOMAIN = 2,
  EGPD_STATUS_CONFIG = 3,
  EGPD_STATUS_DATA = 4,
  EGPD_STATUS_NUMERICAL = 5,
  EGPD_STATUS_PANIC = 6,
} EgpdStatus;

/**
 * An EGPD with fixed parameters.
 */
typedef struct EgpdDist EgpdDist;

/**
 * A posterior fit: summaries and chains loaded from a fit directory.
 */
typedef struct EgpdFit EgpdFit;

/**
 * Posterior summary of one coordinate.
 */
typedef struct EgpdSummary {
  double mean;
  double sd;
  double lower;
  double upper;
  /**
   * NaN when too few draws were available.
   */
  double ess;
  double geweke_z;
  bool selected;
} EgpdSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next failing call on the same thread.
 */
const char *egpd_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *egpd_version(void);

/**
 * Canonical EGPD, `G(v) = v^kappa`.
 *
 * # Safety
 * `out` must be NULL or point to writable storage for one pointer.
 */
enum EgpdStatus egpd_dist_new_power(double kappa, double sigma, double xi, struct EgpdDist **out);

/**
 * Beta-carrier EGPD.
 *
 * # Safety
 * `out` must be NULL or point to writable storage for one pointer.
 */
enum EgpdStatus egpd_dist_new_beta(double kappa, double sigma, double xi, struct EgpdDist **out);

/**
 * Mixture carrier `pi v^kappa1 + (1 - pi) v^kappa2`.
 *
 * # Safety
 * `out` must be NULL or point to writable storage for one pointer.
 */
enum EgpdStatus egpd_dist_new_mixture(double pi,
                                      double kappa1,
                                      double kappa2,
                                      double sigma,
                                      double xi,
                                      struct EgpdDist **out);

/**
 * # Safety
 * `dist` must be NULL or a handle from an `egpd_dist_new_*` call that has
 * not been freed.
 */
void egpd_dist_free(struct EgpdDist *dist);

/**
 * # Safety
 * `dist` must be a live handle and `out` writable, or either may be NULL.
 */
enum EgpdStatus egpd_dist_cdf(const struct EgpdDist *dist, double y, double *out);

/**
 * Survival function, accurate in the upper tail.
 *
 * # Safety
 * `dist` must be a live handle and `out` writable, or either may be NULL.
 */
enum EgpdStatus egpd_dist_sf(const struct EgpdDist *dist, double y, double *out);

/**
 * Log density; `-inf` outside the support.
 *
 * # Safety
 * `dist` must be a live handle and `out` writable, or either may be NULL.
 */
enum EgpdStatus egpd_dist_logpdf(const struct EgpdDist *dist, double y, double *out);

/**
 * # Safety
 * `dist` must be a live handle and `out` writable, or either may be NULL.
 */
enum EgpdStatus egpd_dist_quantile(const struct EgpdDist *dist, double prob, double *out);

/**
 * `n` draws into `out`, fully determined by `seed`.
 *
 * # Safety
 * `dist` must be a live handle and `out` must hold `n` writable doubles.
 */
enum EgpdStatus egpd_dist_sample(const struct EgpdDist *dist, uint64_t seed, size_t n, double *out);

/**
 * Run a fit from a TOML configuration file, writing artifacts to `out_dir`
 * (the configured output directory when NULL), and open the result.
 *
 * # Safety
 * String arguments must be NULL or NUL-terminated; `out` must be writable.
 */
enum EgpdStatus egpd_fit_run(const char *config_path, const char *out_dir, struct EgpdFit **out);

/**
 * Open the artifacts of an earlier fit.
 *
 * # Safety
 * `dir` must be NULL or NUL-terminated; `out` must be writable.
 */
enum EgpdStatus egpd_fit_open(const char *dir, struct EgpdFit **out);

/**
 * # Safety
 * `fit` must be NULL or a live handle.
 */
void egpd_fit_free(struct EgpdFit *fit);

/**
 * Number of sampled coordinates, including λ.
 *
 * # Safety
 * `fit` must be a live handle and `out` writable, or either may be NULL.
 */
enum EgpdStatus egpd_fit_n_coordinates(const struct EgpdFit *fit, size_t *out);

/**
 * Name of coordinate `j`, owned by the handle.
 *
 * # Safety
 * `fit` must be a live handle and `out` writable, or either may be NULL.
 */
enum EgpdStatus egpd_fit_coordinate_name(const struct EgpdFit *fit, size_t j, const char **out);

/**
 * # Safety
 * `fit` must be a live handle and `out` writable, or either may be NULL.
 */
enum EgpdStatus egpd_fit_summary(const struct EgpdFit *fit, size_t j, struct EgpdSummary *out);

/**
 * Posterior mean conditional density at `y` for one covariate row `x` of
 * length `p` on the raw scale (intercept entry included when the model has
 * one), averaged over at most `max_draws` thinned draws (0 for all).
 *
 * # Safety
 * `fit` must be a live handle, `x` must hold `p` doubles and `out` must be
 * writable.
 */
enum EgpdStatus egpd_fit_density(const struct EgpdFit *fit,
                                 const double *x,
                                 size_t p,
                                 double y,
                                 size_t max_draws,
                                 double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EGPD_LASSO_H */
