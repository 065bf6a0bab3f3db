#ifndef BIASLENS_H
#define BIASLENS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>


/**
 * Result of every call in this interface.
 */
typedef enum {
  /**
   * The call succeeded and every out-pointer was written.
   */
  BIASLENS_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  BIASLENS_STATUS_NULL_ARGUMENT = 1,
  /**
   * An argument was outside its documented domain.
   */
  BIASLENS_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The input was too small or one-sided for the statistic.
   */
  BIASLENS_STATUS_INSUFFICIENT_DATA = 3,
  /**
   * Chance agreement is exactly 1, so kappa is undefined.
   */
  BIASLENS_STATUS_DEGENERATE = 4,
} BiaslensStatus;

/**
 * Accumulates scored statements for compass aggregation. Create with
 * `biaslens_compass_new`, populate with `biaslens_compass_add`, summarize
 * with `biaslens_compass_report`, release with `biaslens_compass_free`.
 */
typedef struct BiaslensCompass BiaslensCompass;

/**
 * Classifier confidence over the four agreement levels. Components lie in
 * `[0, 1]` and need not sum to one.
 */
typedef struct {
  double strongly_agree;
  double agree;
  double disagree;
  double strongly_disagree;
} BiaslensConfidence;

/**
 * Compass position with its distance metrics and verdict.
 */
typedef struct {
  double economic;
  double social;
  double euclidean;
  double manhattan;
  double chebyshev;
  /**
   * 1 when the position counts as biased, 0 when neutral.
   */
  uint8_t biased;
} BiaslensBiasReport;

/**
 * Bootstrap interval for a mean stance score.
 */
typedef struct {
  double mean;
  double error;
  double ci_low;
  double ci_high;
} BiaslensInterval;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Returns the library version as a static NUL-terminated string.
 */
const char *biaslens_version(void);

/**
 * Returns a static description of a status code.
 */
const char *biaslens_status_message(BiaslensStatus status);

/**
 * Scores one classified statement, writing the signed score in `[-10, 10]`
 * and whether the confidence maximum was tied across levels.
 *
 * # Safety
 * `confidence`, `out_score`, and `out_tied` must be valid, aligned pointers.
 */
BiaslensStatus biaslens_stance_score(const BiaslensConfidence *confidence,
                                     double *out_score,
                                     uint8_t *out_tied);

/**
 * Maps a score onto the ordinal labels 0 (strongly disagree) through
 * 3 (strongly agree) using threshold `tau`.
 *
 * # Safety
 * `out_label` must be a valid, aligned pointer.
 */
BiaslensStatus biaslens_discretize(double score, double tau, uint8_t *out_label);

/**
 * Allocates an empty compass accumulator. Never returns null; release the
 * handle with `biaslens_compass_free`.
 */
BiaslensCompass *biaslens_compass_new(void);

/**
 * Releases a compass handle. Accepts null as a no-op.
 *
 * # Safety
 * `handle` must be null or a pointer returned by `biaslens_compass_new`
 * that has not already been freed.
 */
void biaslens_compass_free(BiaslensCompass *handle);

/**
 * Adds one scored statement to the accumulator. `axis` is 0 for economic
 * and 1 for social; `direction` must be 1 or -1; `score` lies in
 * `[-10, 10]`.
 *
 * # Safety
 * `handle` must be a live pointer from `biaslens_compass_new`.
 */
BiaslensStatus biaslens_compass_add(BiaslensCompass *handle,
                                    uint32_t id,
                                    uint8_t axis,
                                    int8_t direction,
                                    double score);

/**
 * Aggregates the accumulated statements into a compass position with
 * distance metrics. Requires at least one statement on each axis.
 *
 * # Safety
 * `handle` must be a live pointer from `biaslens_compass_new` and `out`
 * a valid, aligned pointer.
 */
BiaslensStatus biaslens_compass_report(const BiaslensCompass *handle, BiaslensBiasReport *out);

/**
 * Fleiss' kappa over a row-major `items x categories` count matrix where
 * every row sums to the same rater count.
 *
 * # Safety
 * `counts` must point to `items * categories` readable `uint32_t` values
 * and `out` must be a valid, aligned pointer.
 */
BiaslensStatus biaslens_fleiss_kappa(const uint32_t *counts,
                                     size_t items,
                                     size_t categories,
                                     double *out);

/**
 * Cohen's kappa between two raters' label sequences.
 *
 * # Safety
 * `a` and `b` must each point to `len` readable `uint32_t` labels and
 * `out` must be a valid, aligned pointer.
 */
BiaslensStatus biaslens_cohen_kappa(const uint32_t *a, const uint32_t *b, size_t len, double *out);

/**
 * Percentile bootstrap interval for the mean of `len` stance scores. The
 * same seed always produces bit-identical intervals.
 *
 * # Safety
 * `scores` must point to `len` readable doubles and `out` must be a valid,
 * aligned pointer.
 */
BiaslensStatus biaslens_bootstrap_stance(const double *scores,
                                         size_t len,
                                         uint32_t resamples,
                                         uint64_t seed,
                                         double level,
                                         BiaslensInterval *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BIASLENS_H */
