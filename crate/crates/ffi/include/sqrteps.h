#ifndef SQRTEPS_H
#define SQRTEPS_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SqrtepsStatus {
  SQRTEPS_STATUS_OK = 0,
  SQRTEPS_STATUS_NULL_POINTER = 1,
  SQRTEPS_STATUS_INVALID_ARGUMENT = 2,
  SQRTEPS_STATUS_PARSE = 3,
  SQRTEPS_STATUS_IO = 4,
  SQRTEPS_STATUS_GEOGRAPHY = 5,
  SQRTEPS_STATUS_CONFIG = 6,
  SQRTEPS_STATUS_RESOURCE = 7,
  SQRTEPS_STATUS_CHAIN = 8,
  SQRTEPS_STATUS_BUFFER_TOO_SMALL = 9,
  SQRTEPS_STATUS_PANIC = 10,
} SqrtepsStatus;

typedef enum SqrtepsCompactness {
  SQRTEPS_COMPACTNESS_PERIMETER = 0,
  SQRTEPS_COMPACTNESS_L1 = 1,
  SQRTEPS_COMPACTNESS_L2 = 2,
  SQRTEPS_COMPACTNESS_LINF = 3,
} SqrtepsCompactness;

typedef enum SqrtepsLabel {
  SQRTEPS_LABEL_VAR = 0,
  SQRTEPS_LABEL_MM = 1,
} SqrtepsLabel;

typedef struct SqrtepsFiniteChain SqrtepsFiniteChain;

typedef struct SqrtepsFlipRun SqrtepsFlipRun;

typedef struct SqrtepsGeography SqrtepsGeography;

/**
 * Outcome of the test. `tv_slack` is meaningful only when `has_tv_slack`.
 */
typedef struct SqrtepsReport {
  uint64_t k;
  uint64_t count_le;
  double epsilon;
  uint64_t ell;
  double p_value;
  bool has_tv_slack;
  double tv_slack;
} SqrtepsReport;

/**
 * Flip chain constraints.
 */
typedef struct SqrtepsConstraints {
  double pop_tolerance;
  enum SqrtepsCompactness compactness;
  double threshold;
} SqrtepsConstraints;

typedef struct SqrtepsRunCounts {
  uint64_t loops;
  uint64_t rejected;
  uint64_t moved;
  uint64_t audits;
} SqrtepsRunCounts;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the calling thread's last failure; empty after a success.
 * Valid until the next call into this library on the same thread.
 */
const char *sqrteps_last_error(void);

/**
 * Name of the pseudorandom generator behind every seeded function.
 */
const char *sqrteps_generator_id(void);

/**
 * `min(1, √(2ε))`.
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
enum SqrtepsStatus sqrteps_sqrt_eps_pvalue(double epsilon, double *out);

/**
 * `min(1, √(2ε) + ε₁)`.
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
enum SqrtepsStatus sqrteps_pvalue_with_tv(double epsilon, double epsilon1, double *out);

/**
 * `min(1, √((2ℓ+1)/(k+1)))`.
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
enum SqrtepsStatus sqrteps_theorem_bound(uint64_t ell, uint64_t k, double *out);

/**
 * # Safety
 * `out` must be null or valid for writes.
 */
enum SqrtepsStatus sqrteps_power_lower_bound(double epsilon,
                                             uint64_t k,
                                             double tau2,
                                             double pi_min,
                                             double *out);

/**
 * # Safety
 * `out` must be null or valid for writes.
 */
enum SqrtepsStatus sqrteps_gillman_bound(double gamma,
                                         uint64_t n,
                                         double tau2,
                                         double chi,
                                         double *out);

/**
 * Exact `C(k, k/2) / 2^(k+1)` for even `k`.
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
enum SqrtepsStatus sqrteps_cycle_first_dominance_probability(uint64_t k, double *out);

/**
 * Runs the test on `len` labels, the presented state's first.
 *
 * # Safety
 * `labels` must point to `len` readable values; `out` must be valid for writes.
 */
enum SqrtepsStatus sqrteps_run_test(const double *labels,
                                    size_t len,
                                    bool has_tv_slack,
                                    double tv_slack,
                                    struct SqrtepsReport *out);

/**
 * Parses a chain in the plain-text matrix format.
 *
 * # Safety
 * `source` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum SqrtepsStatus sqrteps_finite_chain_parse(const char *source, struct SqrtepsFiniteChain **out);

/**
 * Builds a chain from a row-major `n × n` matrix and `n` labels; the
 * stationary distribution is computed.
 *
 * # Safety
 * `matrix` must hold `n * n` values and `labels` `n`; `out` must be valid for writes.
 */
enum SqrtepsStatus sqrteps_finite_chain_new(const double *matrix,
                                            size_t n,
                                            const double *labels,
                                            struct SqrtepsFiniteChain **out);

/**
 * # Safety
 * `chain` must be null or a handle from this library not yet freed.
 */
void sqrteps_finite_chain_free(struct SqrtepsFiniteChain *chain);

/**
 * # Safety
 * `chain` must be a live handle; `out` must be valid for writes.
 */
enum SqrtepsStatus sqrteps_finite_chain_n_states(const struct SqrtepsFiniteChain *chain,
                                                 size_t *out);

/**
 * Copies the stationary distribution into `out`, which holds `capacity` values.
 *
 * # Safety
 * `chain` must be a live handle; `out` must be valid for `capacity` writes.
 */
enum SqrtepsStatus sqrteps_finite_chain_pi(const struct SqrtepsFiniteChain *chain,
                                           double *out,
                                           size_t capacity);

/**
 * Whether detailed balance holds within `tol`.
 *
 * # Safety
 * `chain` must be a live handle; `out` must be valid for writes.
 */
enum SqrtepsStatus sqrteps_finite_chain_is_reversible(const struct SqrtepsFiniteChain *chain,
                                                      double tol,
                                                      bool *out);

/**
 * Exact probability that `X_j` is ℓ-small among `X_0..X_k` from a stationary start.
 *
 * # Safety
 * `chain` must be a live handle; `out` must be valid for writes.
 */
enum SqrtepsStatus sqrteps_exact_ell_small_probability(const struct SqrtepsFiniteChain *chain,
                                                       size_t k,
                                                       size_t ell,
                                                       size_t j,
                                                       double *out);

/**
 * Samples `k` steps from `start` and writes the `k + 1` labels to `out`.
 *
 * # Safety
 * `chain` must be a live handle; `out` must be valid for `capacity` writes.
 */
enum SqrtepsStatus sqrteps_finite_chain_sample_labels(const struct SqrtepsFiniteChain *chain,
                                                      size_t start,
                                                      uint64_t k,
                                                      uint64_t seed,
                                                      double *out,
                                                      size_t capacity);

/**
 * Loads a geography file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum SqrtepsStatus sqrteps_geography_load(const char *path, struct SqrtepsGeography **out);

/**
 * Synthetic `width × height` grid with the default population and vote models.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum SqrtepsStatus sqrteps_geography_grid(size_t width,
                                          size_t height,
                                          uint64_t seed,
                                          struct SqrtepsGeography **out);

/**
 * # Safety
 * `geo` must be null or a handle from this library not yet freed.
 */
void sqrteps_geography_free(struct SqrtepsGeography *geo);

/**
 * # Safety
 * `geo` must be a live handle; `out` must be valid for writes.
 */
enum SqrtepsStatus sqrteps_geography_len(const struct SqrtepsGeography *geo, size_t *out);

/**
 * Runs the flip chain for `steps` steps and records `label` along the way.
 *
 * The start is `assignment` (one district index per precinct, in geography
 * order) when non-null, otherwise the planted districting of a grid.
 * Validity is audited every `audit_every` steps; 0 disables audits.
 *
 * # Safety
 * `geo` must be a live handle; `assignment` must be null or hold
 * `assignment_len` values; `out` must be valid for writes.
 */
enum SqrtepsStatus sqrteps_flip_run(const struct SqrtepsGeography *geo,
                                    const uint32_t *assignment,
                                    size_t assignment_len,
                                    size_t districts,
                                    struct SqrtepsConstraints constraints,
                                    uint64_t steps,
                                    uint64_t seed,
                                    enum SqrtepsLabel label,
                                    uint64_t audit_every,
                                    struct SqrtepsFlipRun **out);

/**
 * # Safety
 * `run` must be null or a handle from this library not yet freed.
 */
void sqrteps_flip_run_free(struct SqrtepsFlipRun *run);

/**
 * Number of recorded labels, `steps + 1`.
 *
 * # Safety
 * `run` must be a live handle; `out` must be valid for writes.
 */
enum SqrtepsStatus sqrteps_flip_run_len(const struct SqrtepsFlipRun *run, size_t *out);

/**
 * # Safety
 * `run` must be a live handle; `out` must be valid for `capacity` writes.
 */
enum SqrtepsStatus sqrteps_flip_run_labels(const struct SqrtepsFlipRun *run,
                                           double *out,
                                           size_t capacity);

/**
 * # Safety
 * `run` must be a live handle; `out` must be valid for `capacity` writes.
 */
enum SqrtepsStatus sqrteps_flip_run_final_assignment(const struct SqrtepsFlipRun *run,
                                                     uint32_t *out,
                                                     size_t capacity);

/**
 * # Safety
 * `run` must be a live handle; `out` must be valid for writes.
 */
enum SqrtepsStatus sqrteps_flip_run_counts(const struct SqrtepsFlipRun *run,
                                           struct SqrtepsRunCounts *out);

/**
 * Runs the test on the recorded labels.
 *
 * # Safety
 * `run` must be a live handle; `out` must be valid for writes.
 */
enum SqrtepsStatus sqrteps_flip_run_test(const struct SqrtepsFlipRun *run,
                                         bool has_tv_slack,
                                         double tv_slack,
                                         struct SqrtepsReport *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SQRTEPS_H */
