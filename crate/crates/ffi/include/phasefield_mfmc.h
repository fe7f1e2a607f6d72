#ifndef PHASEFIELD_MFMC_H
#define PHASEFIELD_MFMC_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PfmStatus {
  PFM_STATUS_OK = 0,
  PFM_STATUS_NULL_POINTER = 1,
  PFM_STATUS_INVALID_ARGUMENT = 2,
  PFM_STATUS_PARSE = 3,
  PFM_STATUS_BUFFER_TOO_SMALL = 4,
  PFM_STATUS_INSUFFICIENT_BUDGET = 5,
  PFM_STATUS_BELOW_MINIMUM_BUDGET = 6,
  PFM_STATUS_INFINITE_BUDGET = 7,
  PFM_STATUS_DEGENERATE_STATISTICS = 8,
  PFM_STATUS_INSUFFICIENT_EVALUATIONS = 9,
  PFM_STATUS_CONVERGENCE = 10,
  PFM_STATUS_IO = 11,
  PFM_STATUS_PANIC = 12,
  PFM_STATUS_OTHER = 13,
} PfmStatus;

typedef struct PfmModel PfmModel;

typedef struct PfmPlan PfmPlan;

typedef struct PfmStats PfmStats;

typedef struct PfmSubsetTable PfmSubsetTable;

typedef struct PfmSubsetRow {
  /**
   * 1-based rank by variance reduction ratio.
   */
  size_t rank;
  /**
   * 1-based rank by minimum budget.
   */
  size_t bmin_rank;
  double v;
  double bmin_over_c1;
  size_t n_models;
} PfmSubsetRow;

typedef struct PfmSimParams {
  double beta1;
  double beta2;
  double dt;
  double t_final;
  double solver_tol;
  size_t solver_max_iter;
  /**
   * Hold the interaction layer at `u = 1` instead of the initial profile.
   */
  bool pure_phase_layer;
} PfmSimParams;

typedef struct PfmEvaluation {
  double ooi;
  double seconds;
  double nominal_seconds;
} PfmEvaluation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *pfm_version(void);

/**
 * Copies the last error message of this thread into `buf` (truncated and
 * NUL-terminated when `cap > 0`) and returns its full length in bytes,
 * excluding the terminator; 0 when the last call succeeded.
 *
 * # Safety
 * `buf` must be null or valid for `cap` bytes.
 */
size_t pfm_last_error_message(char *buf, size_t cap);

/**
 * Parses statistics in the CSV layout `model,h,delta,rho,cost_ratio,sigma`
 * with an optional `# c1_seconds=` line.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
enum PfmStatus pfm_stats_from_csv(const char *text, struct PfmStats **out);

/**
 * Builds statistics from parallel arrays of length `n`; costs in seconds.
 *
 * # Safety
 * Every array must hold `n` values; `out` must be writable.
 */
enum PfmStatus pfm_stats_from_arrays(size_t n,
                                     const size_t *ids,
                                     const double *h,
                                     const double *delta,
                                     const double *rho,
                                     const double *sigma,
                                     const double *cost,
                                     struct PfmStats **out);

/**
 * Number of models; 0 for a null handle.
 *
 * # Safety
 * `stats` must be null or a live handle.
 */
size_t pfm_stats_len(const struct PfmStats *stats);

/**
 * # Safety
 * `stats` must be null or a handle not yet freed.
 */
void pfm_stats_free(struct PfmStats *stats);

/**
 * # Safety
 * `stats` must be a live handle, `ids` valid for `n` values and `out`
 * writable.
 */
enum PfmStatus pfm_is_feasible(const struct PfmStats *stats,
                               const size_t *ids,
                               size_t n,
                               bool *out);

/**
 * Variance reduction ratio of a feasible subset.
 *
 * # Safety
 * As for [`pfm_is_feasible`].
 */
enum PfmStatus pfm_variance_reduction(const struct PfmStats *stats,
                                      const size_t *ids,
                                      size_t n,
                                      double *out);

/**
 * Smallest budget, in seconds, at which the optimal allocation gives one
 * high-fidelity sample.
 *
 * # Safety
 * As for [`pfm_is_feasible`].
 */
enum PfmStatus pfm_minimum_budget(const struct PfmStats *stats,
                                  const size_t *ids,
                                  size_t n,
                                  double *out);

/**
 * # Safety
 * As for [`pfm_is_feasible`].
 */
enum PfmStatus pfm_theoretical_mse(const struct PfmStats *stats,
                                   const size_t *ids,
                                   size_t n,
                                   double budget,
                                   double *out);

/**
 * Feasible subsets ordered by variance reduction ratio.
 *
 * # Safety
 * `stats` must be a live handle and `out` writable.
 */
enum PfmStatus pfm_subset_table(const struct PfmStats *stats, struct PfmSubsetTable **out);

/**
 * # Safety
 * `table` must be null or a live handle.
 */
size_t pfm_subset_table_len(const struct PfmSubsetTable *table);

/**
 * Row `index` (0-based) of the table.
 *
 * # Safety
 * `table` must be a live handle and `out` writable.
 */
enum PfmStatus pfm_subset_table_row(const struct PfmSubsetTable *table,
                                    size_t index,
                                    struct PfmSubsetRow *out);

/**
 * Model ids of row `index`, high-fidelity model first.
 *
 * # Safety
 * `table` must be a live handle, `ids` valid for `cap` values and `len`
 * writable.
 */
enum PfmStatus pfm_subset_table_models(const struct PfmSubsetTable *table,
                                       size_t index,
                                       size_t *ids,
                                       size_t cap,
                                       size_t *len);

/**
 * # Safety
 * `table` must be null or a handle not yet freed.
 */
void pfm_subset_table_free(struct PfmSubsetTable *table);

/**
 * Sample allocation for `budget` seconds; budgets under the minimum budget
 * but above the guard use the below-minimum rule.
 *
 * # Safety
 * `stats` must be a live handle, `ids` valid for `n` values and `out`
 * writable.
 */
enum PfmStatus pfm_allocate(const struct PfmStats *stats,
                            const size_t *ids,
                            size_t n,
                            double budget,
                            struct PfmPlan **out);

/**
 * Number of levels; 0 for a null handle.
 *
 * # Safety
 * `plan` must be null or a live handle.
 */
size_t pfm_plan_levels(const struct PfmPlan *plan);

/**
 * # Safety
 * `plan` must be null or a live handle.
 */
bool pfm_plan_below_min(const struct PfmPlan *plan);

/**
 * Model ids per level.
 *
 * # Safety
 * `plan` must be a live handle, `buf` valid for `cap` values and `len`
 * writable.
 */
enum PfmStatus pfm_plan_models(const struct PfmPlan *plan, size_t *buf, size_t cap, size_t *len);

/**
 * Sample counts per level.
 *
 * # Safety
 * As for [`pfm_plan_models`].
 */
enum PfmStatus pfm_plan_counts(const struct PfmPlan *plan, uint64_t *buf, size_t cap, size_t *len);

/**
 * Oversampling ratios per level; the first is 1.
 *
 * # Safety
 * As for [`pfm_plan_models`].
 */
enum PfmStatus pfm_plan_ratios(const struct PfmPlan *plan, double *buf, size_t cap, size_t *len);

/**
 * Control-variate weights of levels 2 and up (one fewer than the levels).
 *
 * # Safety
 * As for [`pfm_plan_models`].
 */
enum PfmStatus pfm_plan_alpha(const struct PfmPlan *plan, double *buf, size_t cap, size_t *len);

/**
 * Evaluates the estimator. `values[j]` points to `lens[j]` outputs of the
 * level-`j` model on the shared sample sequence; level `j` needs at least
 * its planned count.
 *
 * # Safety
 * `values` and `lens` must hold one entry per level, each `values[j]`
 * valid for `lens[j]` doubles; `out` writable.
 */
enum PfmStatus pfm_estimate(const struct PfmPlan *plan,
                            const double *const *values,
                            const size_t *lens,
                            size_t levels,
                            double *out);

/**
 * # Safety
 * `plan` must be null or a handle not yet freed.
 */
void pfm_plan_free(struct PfmPlan *plan);

struct PfmSimParams pfm_sim_params_default(void);

/**
 * Forward model on a `cells` x `cells` mesh of the unit square with
 * horizon `delta`; `delta_hf` is the high-fidelity horizon that sets the
 * kernel shape and the layer width.
 *
 * # Safety
 * `out` must be writable.
 */
enum PfmStatus pfm_model_new(size_t cells,
                             double delta,
                             double delta_hf,
                             double eps2,
                             double c_f,
                             struct PfmModel **out);

/**
 * Runs the model for `theta = [mu1, eta1x, eta1y, ..., mu4, eta4x, eta4y]`.
 *
 * # Safety
 * `model` must be a live handle, `theta` valid for 12 doubles, `params`
 * readable and `out` writable.
 */
enum PfmStatus pfm_model_evaluate(const struct PfmModel *model,
                                  const double *theta,
                                  const struct PfmSimParams *params,
                                  struct PfmEvaluation *out);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void pfm_model_free(struct PfmModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PHASEFIELD_MFMC_H */
