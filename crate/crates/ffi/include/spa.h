#ifndef SPA_H
#define SPA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SpaMethod {
  SPA_METHOD_SPA = 0,
  SPA_METHOD_LASSO = 1,
  SPA_METHOD_L1_SVM = 2,
} SpaMethod;

typedef enum SpaStatus {
  SPA_STATUS_OK = 0,
  SPA_STATUS_NULL_POINTER = 1,
  SPA_STATUS_PARSE = 2,
  SPA_STATUS_MISSING_DATA = 3,
  SPA_STATUS_DEGENERATE_INPUT = 4,
  SPA_STATUS_DEGENERATE_OBJECTIVE = 5,
  SPA_STATUS_PARAMETER = 6,
  SPA_STATUS_PIPELINE_ORDER = 7,
  SPA_STATUS_UNDEFINED_METRIC = 8,
  SPA_STATUS_FOLD_DEGENERATE = 9,
  SPA_STATUS_VERSION = 10,
  SPA_STATUS_IO = 11,
  SPA_STATUS_TUNING_FAILED = 12,
  SPA_STATUS_BUFFER_TOO_SMALL = 13,
  SPA_STATUS_PANIC = 14,
} SpaStatus;

/**
 * Opaque labeled dataset.
 */
typedef struct SpaDataset SpaDataset;

/**
 * Opaque selection result.
 */
typedef struct SpaResult SpaResult;

/**
 * Selection options. `smoothing_sigma <= 0` disables smoothing and
 * `tophat_window == 0` disables baseline removal.
 */
typedef struct SpaOptions {
  enum SpaMethod method;
  double lambda;
  double epsilon;
  double smoothing_sigma;
  bool normalize;
  size_t tophat_window;
} SpaOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next `spa_*` call on this thread.
 */
const char *spa_last_error(void);

struct SpaOptions spa_options_default(enum SpaMethod method);

/**
 * Reads a dataset CSV. On success `*out` owns a new handle.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SpaStatus spa_dataset_load_csv(const char *path, struct SpaDataset **out);

/**
 * Builds a dataset from a row-major `n x d` matrix and `n` labels in
 * {+1, -1}. Channels are numbered 1..=d.
 *
 * # Safety
 * `data` must hold `n * d` doubles, `labels` `n` ints, `out` be valid.
 */
enum SpaStatus spa_dataset_from_arrays(const double *data,
                                       size_t n,
                                       size_t d,
                                       const int32_t *labels,
                                       struct SpaDataset **out);

/**
 * # Safety
 * `ds` must be null or a handle from this library.
 */
size_t spa_dataset_n(const struct SpaDataset *ds);

/**
 * # Safety
 * `ds` must be null or a handle from this library.
 */
size_t spa_dataset_d(const struct SpaDataset *ds);

/**
 * # Safety
 * `ds` must be null or a handle from this library, not used afterwards.
 */
void spa_dataset_free(struct SpaDataset *ds);

/**
 * Runs the full pipeline with the fixed `opts->lambda`.
 *
 * # Safety
 * Pointers must be valid; `ds` a dataset handle.
 */
enum SpaStatus spa_run(const struct SpaDataset *ds,
                       const struct SpaOptions *opts,
                       struct SpaResult **out);

/**
 * Tunes lambda until exactly `target_k` features are selected. Returns
 * `SPA_STATUS_TUNING_FAILED` (with the bracket in the error message) if no
 * lambda gives that count.
 *
 * # Safety
 * Pointers must be valid; `ds` a dataset handle.
 */
enum SpaStatus spa_tune(const struct SpaDataset *ds,
                        const struct SpaOptions *opts,
                        size_t target_k,
                        struct SpaResult **out);

/**
 * # Safety
 * `res` must be null or a result handle.
 */
size_t spa_result_d(const struct SpaResult *res);

/**
 * Number of selected features.
 *
 * # Safety
 * `res` must be null or a result handle.
 */
size_t spa_result_nnz(const struct SpaResult *res);

/**
 * # Safety
 * `res` must be null or a result handle.
 */
double spa_result_lambda(const struct SpaResult *res);

/**
 * # Safety
 * `res` must be null or a result handle.
 */
double spa_result_objective(const struct SpaResult *res);

/**
 * Copies the `d` weights into `buf` (capacity `len`).
 *
 * # Safety
 * `buf` must hold `len` doubles.
 */
enum SpaStatus spa_result_weights(const struct SpaResult *res, double *buf, size_t len);

/**
 * Copies the zero-based support indices into `buf` (capacity `len`).
 *
 * # Safety
 * `buf` must hold `len` entries.
 */
enum SpaStatus spa_result_support(const struct SpaResult *res, size_t *buf, size_t len);

/**
 * # Safety
 * `res` must be null or a result handle, not used afterwards.
 */
void spa_result_free(struct SpaResult *res);

/**
 * Checks that a spectrum to be classified has no missing (non-finite)
 * values; returns `SPA_STATUS_MISSING_DATA` otherwise.
 *
 * # Safety
 * `x` must hold `d` doubles.
 */
enum SpaStatus spa_validate_spectrum(const double *x, size_t d);

/**
 * Solves `max <c, w>` subject to `||w||_1 <= sqrt(lambda)`, `||w||_2 <= 1`
 * for a given correlation vector, writing `w` (length `d`) and the optimum.
 *
 * # Safety
 * `c` and `omega_out` must hold `d` doubles; `objective_out` may be null.
 */
enum SpaStatus spa_onebit_select(const double *c,
                                 size_t d,
                                 double lambda,
                                 double *omega_out,
                                 double *objective_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPA_H */
