#ifndef RISKDYN_H
#define RISKDYN_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum RiskdynStatus {
  RISKDYN_STATUS_OK = 0,
  // Invalid configuration or argument.
  RISKDYN_STATUS_USAGE = 1,
  // Bad or missing input data.
  RISKDYN_STATUS_DATA = 2,
  // Numerical failure such as zero variance or a rank-deficient matrix.
  RISKDYN_STATUS_NUMERICAL = 3,
  RISKDYN_STATUS_NULL_POINTER = 4,
  RISKDYN_STATUS_INVALID_UTF8 = 5,
  // A Rust panic was caught at the boundary.
  RISKDYN_STATUS_INTERNAL = 6,
} RiskdynStatus;

// Loaded country-year panel.
typedef struct RiskdynDataset RiskdynDataset;

// Fitted k-means model.
typedef struct RiskdynKMeans RiskdynKMeans;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. The pointer is
// valid until the next riskdyn call on the same thread.
const char *riskdyn_last_error(void);

// Library version as a static NUL-terminated string.
const char *riskdyn_version(void);

// Release a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must come from this library and not have been freed already.
void riskdyn_string_free(char *s);

// Load a CSV with the default column names.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum RiskdynStatus riskdyn_dataset_load(const char *path, struct RiskdynDataset **out);

// # Safety
// `ds` must be NULL or a handle from [`riskdyn_dataset_load`].
void riskdyn_dataset_free(struct RiskdynDataset *ds);

// Number of country-year rows; 0 for NULL.
//
// # Safety
// `ds` must be NULL or a live dataset handle.
size_t riskdyn_dataset_rows(const struct RiskdynDataset *ds);

// Number of distinct countries; 0 for NULL.
//
// # Safety
// `ds` must be NULL or a live dataset handle.
size_t riskdyn_dataset_countries(const struct RiskdynDataset *ds);

// Copy the six indicators of every row (sorted by country, then year) into
// `out`, which must hold `rows * 6` doubles.
//
// # Safety
// `ds` must be a live handle; `out` must point to `len` writable doubles.
enum RiskdynStatus riskdyn_dataset_features(const struct RiskdynDataset *ds,
                                            double *out,
                                            size_t len);

// Fit k-means with `restarts` k-means++ restarts.
//
// # Safety
// `data` must point to `n_rows * n_cols` doubles; `out` must be writable.
enum RiskdynStatus riskdyn_kmeans_fit(const double *data,
                                      size_t n_rows,
                                      size_t n_cols,
                                      size_t k,
                                      size_t restarts,
                                      uint64_t seed,
                                      struct RiskdynKMeans **out);

// # Safety
// `model` must be NULL or a handle from [`riskdyn_kmeans_fit`].
void riskdyn_kmeans_free(struct RiskdynKMeans *model);

// Number of clusters; 0 for NULL.
//
// # Safety
// `model` must be NULL or a live handle.
size_t riskdyn_kmeans_k(const struct RiskdynKMeans *model);

// Within-cluster sum of squares; NaN for NULL.
//
// # Safety
// `model` must be NULL or a live handle.
double riskdyn_kmeans_inertia(const struct RiskdynKMeans *model);

// Copy the training assignments into `out` (`len` >= training rows).
//
// # Safety
// `model` must be a live handle; `out` must point to `len` writable values.
enum RiskdynStatus riskdyn_kmeans_assignments(const struct RiskdynKMeans *model,
                                              size_t *out,
                                              size_t len);

// Copy the centroids row-major into `out` (`len` >= k * n_cols).
//
// # Safety
// `model` must be a live handle; `out` must point to `len` writable doubles.
enum RiskdynStatus riskdyn_kmeans_centroids(const struct RiskdynKMeans *model,
                                            double *out,
                                            size_t len);

// Nearest-centroid labels for new rows.
//
// # Safety
// `data` must point to `n_rows * n_cols` doubles and `out` to `n_rows`
// writable values.
enum RiskdynStatus riskdyn_kmeans_predict(const struct RiskdynKMeans *model,
                                          const double *data,
                                          size_t n_rows,
                                          size_t n_cols,
                                          size_t *out);

// Mean silhouette of a labelling.
//
// # Safety
// `data` must point to `n_rows * n_cols` doubles, `labels` to `n_rows`
// values and `out` to one writable double.
enum RiskdynStatus riskdyn_silhouette(const double *data,
                                      size_t n_rows,
                                      size_t n_cols,
                                      const size_t *labels,
                                      double *out);

// ROC AUC of `scores` against binary `labels`, ties counted as one half.
//
// # Safety
// `scores` and `labels` must point to `n` values; `out` must be writable.
enum RiskdynStatus riskdyn_auc(const double *scores, const size_t *labels, size_t n, double *out);

// Run the full pipeline from a TOML config string. On success, if
// `manifest_json` is not NULL it receives the run manifest as JSON.
//
// # Safety
// `config_toml` must be a NUL-terminated string; `manifest_json` must be
// NULL or writable.
enum RiskdynStatus riskdyn_run_pipeline(const char *config_toml, char **manifest_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RISKDYN_H */
