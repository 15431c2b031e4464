#ifndef SIRMETA_H
#define SIRMETA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum SmStatus {
  SM_STATUS_OK = 0,
  SM_STATUS_NULL_POINTER = 1,
  SM_STATUS_INVALID_PARAMETER = 2,
  SM_STATUS_EMPTY_REALIZATION = 3,
  SM_STATUS_QUADRATURE = 4,
  SM_STATUS_DIVERGENT = 5,
  SM_STATUS_UNEQUAL_PATH_LOSS = 6,
  SM_STATUS_OUT_OF_RANGE = 7,
  SM_STATUS_TRUNCATION = 8,
  SM_STATUS_CONFIG = 9,
  SM_STATUS_IO = 10,
  SM_STATUS_PANIC = 11,
} SmStatus;

/**
 * Result of a Monte Carlo meta distribution run.
 */
typedef struct SmMeta SmMeta;

/**
 * A list of network tiers.
 */
typedef struct SmNetwork SmNetwork;

typedef struct SmGain {
  double value_db;
  double std_error_db;
  uint64_t n_realizations;
} SmGain;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or NULL. Valid until the next
 * failing call on the same thread.
 */
const char *sm_last_error_message(void);

/**
 * Static name of a status code.
 */
const char *sm_status_name(enum SmStatus status);

/**
 * Creates an empty network. Never returns NULL.
 */
struct SmNetwork *sm_network_new(void);

/**
 * # Safety
 * `net` must come from [`sm_network_new`] and not be used afterwards. NULL is ignored.
 */
void sm_network_free(struct SmNetwork *net);

/**
 * # Safety
 * `net` must be a live network handle or NULL.
 */
size_t sm_network_tier_count(const struct SmNetwork *net);

/**
 * Adds a Poisson tier. Pass NaN as `gain_db` to leave the gain unset.
 *
 * # Safety
 * `net` must be a live network handle.
 */
enum SmStatus sm_network_add_ppp(struct SmNetwork *net,
                                 double lambda,
                                 double power,
                                 double alpha,
                                 double gain_db);

/**
 * Adds a triangular lattice tier with spacing `eta`.
 *
 * # Safety
 * `net` must be a live network handle.
 */
enum SmStatus sm_network_add_lattice(struct SmNetwork *net,
                                     double eta,
                                     double power,
                                     double alpha,
                                     double gain_db);

/**
 * Adds a lattice tier whose points are displaced uniformly within `r_pert`.
 *
 * # Safety
 * `net` must be a live network handle.
 */
enum SmStatus sm_network_add_perturbed_lattice(struct SmNetwork *net,
                                               double eta,
                                               double r_pert,
                                               double power,
                                               double alpha,
                                               double gain_db);

/**
 * # Safety
 * `net` must be a live network handle.
 */
enum SmStatus sm_network_add_gauss_poisson(struct SmNetwork *net,
                                           double lambda_p,
                                           double p,
                                           double u,
                                           double power,
                                           double alpha,
                                           double gain_db);

/**
 * # Safety
 * `net` must be a live network handle.
 */
enum SmStatus sm_network_add_matern(struct SmNetwork *net,
                                    double lambda_p,
                                    double c_bar,
                                    double r_c,
                                    double power,
                                    double alpha,
                                    double gain_db);

/**
 * `F(b, delta, theta)` for complex `b`; `theta` is linear.
 *
 * # Safety
 * `out_re` and `out_im` must be valid for writes.
 */
enum SmStatus sm_hyp_f(double b_re,
                       double b_im,
                       double delta,
                       double theta,
                       double *out_re,
                       double *out_im);

/**
 * Moment `M_b` of the Poisson network; `theta` is linear.
 *
 * # Safety
 * `out_re` and `out_im` must be valid for writes.
 */
enum SmStatus sm_mb_ppp(double b_re,
                        double b_im,
                        double delta,
                        double theta,
                        double *out_re,
                        double *out_im);

/**
 * Approximate moment of a network whose tiers all carry gains.
 *
 * # Safety
 * `net` must be a live handle; `out_re`, `out_im` valid for writes.
 */
enum SmStatus sm_mb_hcn(const struct SmNetwork *net,
                        double b_re,
                        double b_im,
                        double theta_db,
                        double *out_re,
                        double *out_im);

/**
 * Effective gain of a network with a common path-loss exponent.
 *
 * # Safety
 * `net` must be a live handle; `out_db` valid for writes.
 */
enum SmStatus sm_effective_gain_db(const struct SmNetwork *net, double *out_db);

/**
 * Meta distribution by Gil-Pelaez inversion of the approximate moments.
 *
 * # Safety
 * `net` must be a live handle; `out_ccdf` valid for writes.
 */
enum SmStatus sm_meta_gp(const struct SmNetwork *net, double theta_db, double x, double *out_ccdf);

/**
 * Meta distribution by beta moment matching of the approximate moments.
 *
 * # Safety
 * `net` must be a live handle; `out_ccdf` valid for writes.
 */
enum SmStatus sm_meta_beta(const struct SmNetwork *net,
                           double theta_db,
                           double x,
                           double *out_ccdf);

/**
 * Estimates the asymptotic gain of tier `tier` on its own, simulated in the
 * square window of half side `half_extent`.
 *
 * # Safety
 * `net` must be a live handle; `out_gain` valid for writes.
 */
enum SmStatus sm_estimate_g0(const struct SmNetwork *net,
                             size_t tier,
                             double half_extent,
                             size_t n,
                             uint64_t seed,
                             struct SmGain *out_gain);

/**
 * Largest threshold (dB) at which every user of a triangular lattice
 * network with spacing `eta` succeeds with probability at least `x`.
 *
 * # Safety
 * `out_theta_db` must be valid for writes.
 */
enum SmStatus sm_critical_theta_db(double eta, double alpha, double x, double *out_theta_db);

/**
 * Monte Carlo meta distribution on the grid `theta_db[n_theta]` x `x[n_x]`.
 * On success `*out_meta` receives a handle to release with [`sm_meta_free`].
 *
 * # Safety
 * `net` must be a live handle, the arrays valid for their lengths, and
 * `out_meta` valid for writes.
 */
enum SmStatus sm_simulate_meta(const struct SmNetwork *net,
                               double half_extent,
                               const double *theta_db,
                               size_t n_theta,
                               const double *x,
                               size_t n_x,
                               size_t n,
                               uint64_t seed,
                               struct SmMeta **out_meta);

/**
 * Empirical ccdf and its standard error at grid cell (`theta_index`, `x_index`).
 *
 * # Safety
 * `meta` must be a live handle; out-pointers valid for writes (`out_std_error` may be NULL).
 */
enum SmStatus sm_meta_ccdf(const struct SmMeta *meta,
                           size_t theta_index,
                           size_t x_index,
                           double *out_ccdf,
                           double *out_std_error);

/**
 * # Safety
 * `meta` must come from [`sm_simulate_meta`] and not be used afterwards. NULL is ignored.
 */
void sm_meta_free(struct SmMeta *meta);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SIRMETA_H */
