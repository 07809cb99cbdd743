#ifndef MMR_CLUSTER_H
#define MMR_CLUSTER_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MmrFormat {
  MMR_FORMAT_WIDE = 0,
  MMR_FORMAT_LONG = 1,
} MmrFormat;

typedef enum MmrImpute {
  MMR_IMPUTE_MEAN_COLUMN = 0,
  MMR_IMPUTE_LINEAR_INTERPOLATE = 1,
  MMR_IMPUTE_FORWARD_FILL = 2,
} MmrImpute;

typedef enum MmrLinkage {
  MMR_LINKAGE_SINGLE = 0,
  MMR_LINKAGE_COMPLETE = 1,
  MMR_LINKAGE_AVERAGE = 2,
  MMR_LINKAGE_WARD = 3,
} MmrLinkage;

typedef enum MmrScale {
  MMR_SCALE_STANDARD = 0,
  MMR_SCALE_MIN_MAX = 1,
} MmrScale;

typedef enum MmrStatus {
  MMR_STATUS_OK = 0,
  MMR_STATUS_NULL_POINTER = 1,
  MMR_STATUS_INVALID_UTF8 = 2,
  /**
   * Malformed or invalid input data.
   */
  MMR_STATUS_INGESTION = 3,
  MMR_STATUS_PREPROCESS = 4,
  MMR_STATUS_CLUSTERING = 5,
  MMR_STATUS_PAIRING = 6,
  /**
   * An argument or option is out of range.
   */
  MMR_STATUS_INVALID_ARGUMENT = 7,
  /**
   * Model file or I/O failure.
   */
  MMR_STATUS_PERSISTENCE = 8,
  MMR_STATUS_BUFFER_TOO_SMALL = 9,
  MMR_STATUS_PANIC = 10,
} MmrStatus;

/**
 * Parsed dataset.
 */
typedef struct MmrDataset MmrDataset;

/**
 * Fitted or loaded cluster model.
 */
typedef struct MmrModel MmrModel;

/**
 * Preprocessing chain. Pass NULL wherever a `const MmrPrep *` is accepted
 * to get linear interpolation followed by standardization.
 */
typedef struct MmrPrep {
  enum MmrImpute impute;
  enum MmrScale scale;
} MmrPrep;

/**
 * Pair thresholds. NULL selects r >= 0.9 similar, r <= -0.5 opposite,
 * alpha 0.05, level distance <= 0.5 with the level check enabled.
 */
typedef struct MmrPairing {
  double similar_r_min;
  double opposite_r_max;
  double alpha;
  double level_distance_max;
  /**
   * Non-zero: SIMILAR also requires the level distance check.
   */
  int32_t require_level;
} MmrPairing;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Code of the last failure on this thread: the library's numeric error
 * code (100-699), a negated [`MmrStatus`] for boundary errors, or 0.
 */
int32_t mmr_last_error_code(void);

/**
 * Message for the last failure on this thread, or NULL. Valid until the
 * next failing call on the same thread.
 */
const char *mmr_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *mmr_version(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library.
 */
void mmr_string_free(char *s);

/**
 * Parses CSV text into a dataset.
 *
 * # Safety
 * `csv` must be a NUL-terminated string; `out` must be writable.
 */
enum MmrStatus mmr_dataset_parse(const char *csv, enum MmrFormat format, struct MmrDataset **out);

/**
 * # Safety
 * `dataset` must be NULL or a handle from [`mmr_dataset_parse`].
 */
void mmr_dataset_free(struct MmrDataset *dataset);

/**
 * Number of countries, or 0 for NULL.
 *
 * # Safety
 * `dataset` must be NULL or a live handle.
 */
size_t mmr_dataset_len(const struct MmrDataset *dataset);

/**
 * First and last year of the dataset.
 *
 * # Safety
 * `dataset` must be a live handle; `start` and `end` must be writable.
 */
enum MmrStatus mmr_dataset_years(const struct MmrDataset *dataset, int32_t *start, int32_t *end);

/**
 * K-Means with k-means++ seeding; the best of `restarts` runs with seeds
 * `seed, seed + 1, ...` is kept.
 *
 * # Safety
 * `dataset` must be a live handle; `prep` NULL or valid; `out` writable.
 */
enum MmrStatus mmr_cluster_kmeans(const struct MmrDataset *dataset,
                                  const struct MmrPrep *prep,
                                  size_t k,
                                  uint64_t seed,
                                  size_t restarts,
                                  struct MmrModel **out);

/**
 * Agglomerative clustering cut into `k` groups.
 *
 * # Safety
 * As for [`mmr_cluster_kmeans`].
 */
enum MmrStatus mmr_cluster_hier(const struct MmrDataset *dataset,
                                const struct MmrPrep *prep,
                                size_t k,
                                enum MmrLinkage linkage,
                                struct MmrModel **out);

/**
 * Affinity propagation. A NaN `preference` selects the median similarity.
 *
 * # Safety
 * As for [`mmr_cluster_kmeans`].
 */
enum MmrStatus mmr_cluster_ap(const struct MmrDataset *dataset,
                              const struct MmrPrep *prep,
                              double damping,
                              double preference,
                              struct MmrModel **out);

/**
 * # Safety
 * `model` must be NULL or a handle returned by this library.
 */
void mmr_model_free(struct MmrModel *model);

/**
 * Number of clusters, or 0 for NULL.
 *
 * # Safety
 * `model` must be NULL or a live handle.
 */
size_t mmr_model_k(const struct MmrModel *model);

/**
 * Copies the training labels into `labels[0..n)`, where n is the number
 * of training countries. Fails for models loaded from JSON.
 *
 * # Safety
 * `model` must be a live handle; `labels` must hold `len` elements.
 */
enum MmrStatus mmr_model_training_labels(const struct MmrModel *model, size_t *labels, size_t len);

/**
 * Serializes the model; free the result with [`mmr_string_free`].
 *
 * # Safety
 * `model` must be a live handle; `out` writable.
 */
enum MmrStatus mmr_model_to_json(const struct MmrModel *model, char **out);

/**
 * # Safety
 * `json` must be a NUL-terminated string; `out` writable.
 */
enum MmrStatus mmr_model_from_json(const char *json, struct MmrModel **out);

/**
 * # Safety
 * `model` must be a live handle; `path` a NUL-terminated UTF-8 path.
 */
enum MmrStatus mmr_model_save(const struct MmrModel *model, const char *path);

/**
 * # Safety
 * `path` must be a NUL-terminated UTF-8 path; `out` writable.
 */
enum MmrStatus mmr_model_load(const char *path, struct MmrModel **out);

/**
 * Labels every country of `dataset` with the nearest reference point,
 * after the model's stored imputation and scaling. Writes
 * `mmr_dataset_len(dataset)` labels.
 *
 * # Safety
 * Handles must be live; `labels` must hold `len` elements.
 */
enum MmrStatus mmr_predict(const struct MmrModel *model,
                           const struct MmrDataset *dataset,
                           size_t *labels,
                           size_t len);

/**
 * SIMILAR and OPPOSITE pairs as two CSV documents
 * (`country_a,country_b,r,t_stat,p_value,level_distance,verdict`).
 * Free both with [`mmr_string_free`].
 *
 * # Safety
 * `dataset` must be live; `prep` and `options` NULL or valid; both out
 * pointers writable.
 */
enum MmrStatus mmr_pairs_csv(const struct MmrDataset *dataset,
                             const struct MmrPrep *prep,
                             const struct MmrPairing *options,
                             char **similar,
                             char **opposite);

/**
 * Two-sided t-test of a correlation `r` over `n` observations. For
 * `|r| = 1` the statistic is +/-infinity and the p-value 0.
 *
 * # Safety
 * `t_stat` and `p_value` must be writable.
 */
enum MmrStatus mmr_correlation_test(double r, size_t n, double *t_stat, double *p_value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MMR_CLUSTER_H */
