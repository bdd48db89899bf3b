#ifndef SD_SENTINEL_H
#define SD_SENTINEL_H

/* Generated by cbindgen from the sd-sentinel-ffi crate; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result code of every fallible call.
 */
typedef enum SdStatus {
  SD_STATUS_OK = 0,
  SD_STATUS_NULL_POINTER = 1,
  SD_STATUS_INVALID_ARGUMENT = 2,
  SD_STATUS_IO = 3,
  SD_STATUS_PARSE = 4,
  SD_STATUS_SHAPE_MISMATCH = 5,
  SD_STATUS_DEGENERATE = 6,
  SD_STATUS_TOO_SHORT = 7,
  SD_STATUS_CHECKPOINT = 8,
  SD_STATUS_CONFIG = 9,
  SD_STATUS_PANIC = 10,
} SdStatus;

/*
 Trained or freshly built network.
 */
typedef struct SdModel SdModel;

/*
 Per-minute probabilities and decisions for one trace.
 */
typedef struct SdOutcomes SdOutcomes;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or null. Valid until the
 next failing call on the same thread.
 */
const char *sd_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *sd_version(void);

/*
 Builds the declared architecture; `variant` is 0 dual, 1 image-only,
 2 vector-only.
 */
enum SdStatus sd_model_build(uint32_t variant, uint64_t seed, struct SdModel **out);

/*
 # Safety
 `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum SdStatus sd_model_load(const char *path, struct SdModel **out);

/*
 # Safety
 `model` must come from this library; `path` must be NUL-terminated.
 */
enum SdStatus sd_model_save(const struct SdModel *model, const char *path);

/*
 # Safety
 `model` must come from this library and not be used afterwards. Null is
 ignored.
 */
void sd_model_free(struct SdModel *model);

/*
 Number of scalar parameters; 0 for a null handle.

 # Safety
 `model` must be null or come from this library.
 */
size_t sd_model_param_count(const struct SdModel *model);

/*
 Probability for one window: a 30×30 image (`[freq][time]`, row-major)
 and a 30-value power vector, both already normalized.

 # Safety
 Pointers must be valid for their lengths; `out_prob` must be writable.
 */
enum SdStatus sd_model_predict(const struct SdModel *model,
                               const float *image,
                               size_t image_len,
                               const float *vector,
                               size_t vector_len,
                               double *out_prob);

/*
 Full detection on raw samples: conditioning, spectral features, window
 crops and per-minute inference at `threshold`.

 # Safety
 `samples` must be valid for `n` values; `out` must be writable.
 */
enum SdStatus sd_detect(const struct SdModel *model,
                        const double *samples,
                        size_t n,
                        double sample_rate_hz,
                        double threshold,
                        struct SdOutcomes **out);

/*
 # Safety
 `outcomes` must be null or come from this library.
 */
size_t sd_outcomes_len(const struct SdOutcomes *outcomes);

/*
 Centre minute of the first outcome.

 # Safety
 `outcomes` must be null or come from this library.
 */
uint32_t sd_outcomes_start_min(const struct SdOutcomes *outcomes);

/*
 Borrowed array of `sd_outcomes_len` probabilities.

 # Safety
 `outcomes` must be null or come from this library.
 */
const double *sd_outcomes_probabilities(const struct SdOutcomes *outcomes);

/*
 Borrowed array of `sd_outcomes_len` 0/1 decisions.

 # Safety
 `outcomes` must be null or come from this library.
 */
const uint8_t *sd_outcomes_values(const struct SdOutcomes *outcomes);

/*
 # Safety
 `outcomes` must come from this library and not be used afterwards. Null
 is ignored.
 */
void sd_outcomes_free(struct SdOutcomes *outcomes);

/*
 30-minute sliding sums of `n` binary outcomes into `out_scores`, which
 must hold `n - 29` values; `*out_len` receives that count.

 # Safety
 Pointers must be valid for the stated lengths.
 */
enum SdStatus sd_confidence(const uint8_t *values,
                            size_t n,
                            uint32_t *out_scores,
                            size_t capacity,
                            size_t *out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SD_SENTINEL_H */
