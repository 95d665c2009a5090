#ifndef SICAOI_H
#define SICAOI_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum {
  SICAOI_STATUS_OK = 0,
  SICAOI_STATUS_NULL_POINTER = 1,
  SICAOI_STATUS_INVALID_ARGUMENT = 2,
  SICAOI_STATUS_OUT_OF_RANGE = 3,
  SICAOI_STATUS_MODEL_INCONSISTENCY = 4,
  SICAOI_STATUS_CONFIG = 5,
  SICAOI_STATUS_IO = 6,
  SICAOI_STATUS_ARTIFACT = 7,
  SICAOI_STATUS_PANIC = 8,
} SicaoiStatus;

/**
 * Scenario parameters (opaque).
 */
typedef struct SicaoiConfig SicaoiConfig;

/**
 * Analytic model prepared for one config and policy (opaque).
 */
typedef struct SicaoiModel SicaoiModel;

/**
 * Optimized access policy together with the SIC profile it came from (opaque).
 */
typedef struct SicaoiPolicy SicaoiPolicy;

/**
 * Analytic metrics at one mean generation time. Times in s, energy in J.
 */
typedef struct {
  double s;
  double b;
  double p_s;
  double theta;
  double theta_norm;
  double cbr;
  double mean_delay;
  double mean_aoi;
  /**
   * AoI tail decay rate (1/s); +inf when every transmission succeeds.
   */
  double zeta;
  double energy;
  double mean_backlog;
  double std_backlog;
  double s_inf;
} SicaoiMetrics;

/**
 * Simulated estimate with its 95% half-width.
 */
typedef struct {
  double mean;
  double half_width;
} SicaoiEstimate;

typedef struct {
  SicaoiEstimate pdr;
  SicaoiEstimate theta_norm;
  SicaoiEstimate cbr;
  SicaoiEstimate mean_delay;
  SicaoiEstimate mean_aoi;
  SicaoiEstimate energy;
  SicaoiEstimate mean_backlog;
} SicaoiSimMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread; empty if none. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *sicaoi_last_error(void);

/**
 * Reference scenario defaults. Never NULL; release with `sicaoi_config_free`.
 */
SicaoiConfig *sicaoi_config_default(void);

/**
 * Parses a `key = value` config file into `*out`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
SicaoiStatus sicaoi_config_load(const char *path, SicaoiConfig **out);

/**
 * Sets the mean generation time `S = 1/lambda` (s).
 *
 * # Safety
 * `cfg` must come from this library.
 */
SicaoiStatus sicaoi_config_set_generation_time(SicaoiConfig *cfg, double s);

/**
 * Sets the random seed used for profiles and simulations.
 *
 * # Safety
 * `cfg` must come from this library.
 */
SicaoiStatus sicaoi_config_set_seed(SicaoiConfig *cfg, uint64_t seed);

/**
 * Sets the Monte Carlo trials per profile cell.
 *
 * # Safety
 * `cfg` must come from this library.
 */
SicaoiStatus sicaoi_config_set_mc_trials(SicaoiConfig *cfg, size_t trials);

/**
 * Node count of the scenario, or 0 for a NULL handle.
 *
 * # Safety
 * `cfg` must be NULL or come from this library.
 */
size_t sicaoi_config_nodes(const SicaoiConfig *cfg);

/**
 * # Safety
 * `cfg` must be NULL or come from `sicaoi_config_*` and not be freed twice.
 */
void sicaoi_config_free(SicaoiConfig *cfg);

/**
 * Builds the policy for `cfg`. With a non-NULL `cache_dir` the bundle is
 * loaded from, or stored into, that directory. `fitted != 0` selects the
 * closed-form policy, otherwise the raw grid optimum.
 *
 * # Safety
 * `cfg` must come from this library, `cache_dir` be NULL or NUL-terminated,
 * `out` a valid pointer.
 */
SicaoiStatus sicaoi_policy_build(const SicaoiConfig *cfg,
                                 const char *cache_dir,
                                 int32_t fitted,
                                 SicaoiPolicy **out);

/**
 * Fitted constants of the policy. Any output pointer may be NULL.
 *
 * # Safety
 * `policy` must come from this library; non-NULL outputs must be valid.
 */
SicaoiStatus sicaoi_policy_constants(const SicaoiPolicy *policy,
                                     size_t *k_c,
                                     double *a_gamma,
                                     double *b_gamma,
                                     double *a_d);

/**
 * Policy entry for `k` backlogged nodes (`0 <= k <= n`): transmit
 * probability, target SNIR and slot length (s).
 *
 * # Safety
 * `policy` must come from this library; outputs must be valid pointers.
 */
SicaoiStatus sicaoi_policy_entry(const SicaoiPolicy *policy,
                                 size_t k,
                                 double *p,
                                 double *gamma,
                                 double *slot);

/**
 * # Safety
 * `policy` must be NULL or come from `sicaoi_policy_build`, freed once.
 */
void sicaoi_policy_free(SicaoiPolicy *policy);

/**
 * Prepares the analytic model for `cfg` and `policy`.
 *
 * # Safety
 * Handles must come from this library; `out` must be valid.
 */
SicaoiStatus sicaoi_model_new(const SicaoiConfig *cfg,
                              const SicaoiPolicy *policy,
                              SicaoiModel **out);

/**
 * Evaluates all analytic metrics at mean generation time `s` (s).
 *
 * # Safety
 * `model` must come from this library; `out` must be valid.
 */
SicaoiStatus sicaoi_model_evaluate(const SicaoiModel *model, double s, SicaoiMetrics *out);

/**
 * # Safety
 * `model` must be NULL or come from `sicaoi_model_new`, freed once.
 */
void sicaoi_model_free(SicaoiModel *model);

/**
 * Simulates `replications` runs of `slots` slots (10% warmup) at the
 * generation time configured in `cfg`.
 *
 * # Safety
 * Handles must come from this library; `out` must be valid.
 */
SicaoiStatus sicaoi_simulate(const SicaoiConfig *cfg,
                             const SicaoiPolicy *policy,
                             size_t replications,
                             uint64_t slots,
                             SicaoiSimMetrics *out);

/**
 * Packets decoded by an ideal SIC receiver from `len` received SNRs in
 * descending order, at threshold `gamma`.
 *
 * # Safety
 * `powers` must point to `len` doubles (may be NULL when `len == 0`);
 * `out` must be valid.
 */
SicaoiStatus sicaoi_sic_decode_count(const double *powers, size_t len, double gamma, size_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SICAOI_H */
