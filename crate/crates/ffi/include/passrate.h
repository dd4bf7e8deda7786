#ifndef PASSRATE_H
#define PASSRATE_H

/* Generated by cbindgen from the passrate-ffi crate. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  PR_MOTION_KIND_CIRCLE = 0,
  PR_MOTION_KIND_ELLIPSE = 1,
} PrMotionKind;

typedef enum {
  PR_STATUS_OK = 0,
  PR_STATUS_NULL_ARGUMENT = 1,
  PR_STATUS_INVALID_ARGUMENT = 2,
  PR_STATUS_IO = 3,
  PR_STATUS_SCHEMA = 4,
  PR_STATUS_INTEGRITY = 5,
  PR_STATUS_PRECONDITION = 6,
  PR_STATUS_DIMENSION = 7,
  PR_STATUS_GEOMETRY = 8,
  PR_STATUS_NOT_FOUND = 9,
  PR_STATUS_PANIC = 10,
} PrStatus;

/**
 * A loaded or generated match.
 */
typedef struct PrDataset PrDataset;

/**
 * One feature row per pass.
 */
typedef struct PrFeatureMatrix PrFeatureMatrix;

/**
 * A trained classifier.
 */
typedef struct PrModel PrModel;

/**
 * Dominant regions of every player at one step.
 */
typedef struct PrSubdivision PrSubdivision;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *pr_version(void);

/**
 * Copies the last error message of this thread into `buf` (truncated and
 * NUL-terminated) and returns the full message length in bytes, or 0 when
 * there is no error. Pass a null `buf` to query the length.
 *
 * # Safety
 * `buf` must be null or valid for writes of `len` bytes.
 */
size_t pr_last_error_message(char *buf, size_t len);

/**
 * Loads the three CSV files of a match from a directory.
 *
 * # Safety
 * `dir` must be a NUL-terminated string and `out` valid for one write.
 */
PrStatus pr_dataset_load_dir(const char *dir, PrDataset **out);

/**
 * Generates a synthetic match with default team sizes.
 *
 * # Safety
 * `out` must be valid for one write.
 */
PrStatus pr_dataset_generate(uint64_t seed,
                             uint32_t duration_steps,
                             double pass_rate,
                             PrDataset **out);

/**
 * # Safety
 * `ds` must be null or a handle from this library, not yet freed.
 */
void pr_dataset_free(PrDataset *ds);

/**
 * # Safety
 * `ds` must be a live handle and `out` valid for one write.
 */
PrStatus pr_dataset_pass_count(const PrDataset *ds, size_t *out);

/**
 * Last clock step of the match.
 *
 * # Safety
 * `ds` must be a live handle and `out` valid for one write.
 */
PrStatus pr_dataset_max_step(const PrDataset *ds, uint32_t *out);

/**
 * Computes the dominant regions at `step` with default model parameters.
 *
 * # Safety
 * `ds` must be a live handle and `out` valid for one write.
 */
PrStatus pr_subdivision_compute(const PrDataset *ds,
                                uint32_t step,
                                PrMotionKind kind,
                                PrSubdivision **out);

/**
 * # Safety
 * `sub` must be null or a handle from this library, not yet freed.
 */
void pr_subdivision_free(PrSubdivision *sub);

/**
 * # Safety
 * `sub` must be a live handle and `out` valid for one write.
 */
PrStatus pr_subdivision_region_count(const PrSubdivision *sub, size_t *out);

/**
 * Area in square metres of one player's region.
 *
 * # Safety
 * `sub` must be a live handle and `out` valid for one write.
 */
PrStatus pr_subdivision_area(const PrSubdivision *sub, uint32_t player, double *out);

/**
 * Player whose region contains `(x, y)`; `PR_STATUS_NOT_FOUND` when none.
 *
 * # Safety
 * `sub` must be a live handle and `out` valid for one write.
 */
PrStatus pr_subdivision_owner_at(const PrSubdivision *sub, double x, double y, uint32_t *out);

/**
 * Feature matrix of every pass, with masked entries imputed.
 *
 * # Safety
 * `ds` must be a live handle and `out` valid for one write.
 */
PrStatus pr_features_compute(const PrDataset *ds, PrMotionKind kind, PrFeatureMatrix **out);

/**
 * # Safety
 * `fm` must be null or a handle from this library, not yet freed.
 */
void pr_features_free(PrFeatureMatrix *fm);

/**
 * # Safety
 * `fm` must be a live handle; `rows` and `cols` valid for one write each.
 */
PrStatus pr_features_shape(const PrFeatureMatrix *fm, size_t *rows, size_t *cols);

/**
 * # Safety
 * `fm` must be a live handle and `out` valid for one write.
 */
PrStatus pr_features_get(const PrFeatureMatrix *fm, size_t row, size_t col, double *out);

/**
 * # Safety
 * `fm` must be a live handle and `path` a NUL-terminated string.
 */
PrStatus pr_features_write_csv(const PrFeatureMatrix *fm, const char *path);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` valid for one write.
 */
PrStatus pr_model_load(const char *path, PrModel **out);

/**
 * # Safety
 * `model` must be null or a handle from this library, not yet freed.
 */
void pr_model_free(PrModel *model);

/**
 * Number of classes and of input features.
 *
 * # Safety
 * `model` must be a live handle; `k` and `n` valid for one write each.
 */
PrStatus pr_model_shape(const PrModel *model, size_t *k, size_t *n);

/**
 * Predicted 1-based class of a raw (unstandardized) feature row.
 *
 * # Safety
 * `model` must be a live handle, `x` must point to `n` doubles and `out`
 * must be valid for one write.
 */
PrStatus pr_model_predict(const PrModel *model, const double *x, size_t n, uint32_t *out);

/**
 * Class probabilities of a raw feature row, written to `out[0..k]`.
 *
 * # Safety
 * `model` must be a live handle, `x` must point to `n` doubles and `out`
 * to `k` writable doubles.
 */
PrStatus pr_model_probabilities(const PrModel *model,
                                const double *x,
                                size_t n,
                                double *out,
                                size_t k);

/**
 * Cohen's kappa of two labelings of `n` items.
 *
 * # Safety
 * `a` and `b` must each point to `n` readable values and `out` must be
 * valid for one write.
 */
PrStatus pr_cohens_kappa(const uint32_t *a, const uint32_t *b, size_t n, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PASSRATE_H */
