#ifndef META3DSEG_H
#define META3DSEG_H

/* Generated by cbindgen from meta3dseg-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible binding call.
 */
typedef enum M3dsStatus {
  M3DS_STATUS_OK = 0,
  M3DS_STATUS_NULL_POINTER = 1,
  M3DS_STATUS_INVALID_STRING = 2,
  M3DS_STATUS_INVALID_ARGUMENT = 3,
  M3DS_STATUS_INVALID_CONFIG = 4,
  M3DS_STATUS_SHAPE_MISMATCH = 5,
  M3DS_STATUS_NON_FINITE = 6,
  M3DS_STATUS_FORMAT = 7,
  M3DS_STATUS_DIVERGED = 8,
  M3DS_STATUS_IO = 9,
  M3DS_STATUS_PANIC = 10,
} M3dsStatus;

/**
 * A loaded dataset directory.
 */
typedef struct M3dsDataset M3dsDataset;

/**
 * A meta/learner checkpoint pair ready for inference.
 */
typedef struct M3dsModel M3dsModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static string.
 */
const char *m3ds_version(void);

/**
 * Copy the calling thread's last error message into `buf` (truncated to
 * `cap` bytes including the NUL). Returns the full message length.
 *
 * # Safety
 * `buf` must be NULL or point to at least `cap` writable bytes.
 */
size_t m3ds_last_error(char *buf, size_t cap);

/**
 * Load a dataset directory written by the `gen-data` command.
 *
 * # Safety
 * `dir` must be a valid NUL-terminated path and `out` a valid pointer.
 */
enum M3dsStatus m3ds_dataset_load(const char *dir, struct M3dsDataset **out);

/**
 * Number of shapes in the dataset; 0 for NULL.
 *
 * # Safety
 * `ds` must be NULL or a live dataset handle.
 */
size_t m3ds_dataset_len(const struct M3dsDataset *ds);

/**
 * Copy the id of shape `index` into `buf`; returns the id's byte length
 * through the return value, or 0 with an error set when out of range.
 *
 * # Safety
 * `ds` must be a live dataset handle; `buf` NULL or `cap` writable bytes.
 */
size_t m3ds_dataset_shape_id(const struct M3dsDataset *ds, size_t index, char *buf, size_t cap);

/**
 * Release a dataset handle. NULL is a no-op.
 *
 * # Safety
 * `ds` must be NULL or a handle not used after this call.
 */
void m3ds_dataset_free(struct M3dsDataset *ds);

/**
 * Load a meta checkpoint and the learner checkpoint fine-tuned from it.
 *
 * # Safety
 * Both paths must be valid NUL-terminated strings and `out` valid.
 */
enum M3dsStatus m3ds_model_load(const char *meta, const char *learner, struct M3dsModel **out);

/**
 * Release a model handle. NULL is a no-op.
 *
 * # Safety
 * `model` must be NULL or a handle not used after this call.
 */
void m3ds_model_free(struct M3dsModel *model);

/**
 * Predict a branch label per stored cloud point of shape `shape_id`.
 * Writes at most `cap` labels; `out_len` always receives the point
 * count, so a first call with `cap` 0 sizes the buffer.
 *
 * # Safety
 * Handles must be live; `labels` must be NULL or `cap` writable u32s;
 * `out_len` must be valid.
 */
enum M3dsStatus m3ds_model_segment(const struct M3dsModel *model,
                                   const struct M3dsDataset *ds,
                                   const char *shape_id,
                                   uint32_t *labels,
                                   size_t cap,
                                   size_t *out_len);

/**
 * Segment and score every `category` shape in the dataset; IoU and
 * accuracy come back through the out parameters.
 *
 * # Safety
 * Handles must be live; `category` a valid string; out pointers valid.
 */
enum M3dsStatus m3ds_model_evaluate(const struct M3dsModel *model,
                                    const struct M3dsDataset *ds,
                                    const char *category,
                                    double *out_mean_iou,
                                    double *out_accuracy);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* META3DSEG_H */
