#ifndef CRISIS_TRIAGE_H
#define CRISIS_TRIAGE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Number of actionability categories.
 */
#define CT_CATEGORY_COUNT 9

/**
 * Result of every fallible call.
 */
typedef enum CtStatus {
  CT_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  CT_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  CT_STATUS_INVALID_UTF8 = 2,
  /**
   * A file could not be read.
   */
  CT_STATUS_IO = 3,
  /**
   * A file or message was malformed.
   */
  CT_STATUS_DATA = 4,
  /**
   * An argument was out of range, such as a threshold outside (0, 1).
   */
  CT_STATUS_INVALID_ARGUMENT = 5,
  /**
   * The library panicked; the handle should not be used again.
   */
  CT_STATUS_INTERNAL = 6,
} CtStatus;

/**
 * Opaque pipeline handle.
 */
typedef struct CtPipeline CtPipeline;

/**
 * Outcome of classifying one message.
 */
typedef struct CtClassification {
  /**
   * 1 when the message passed the informativeness gate, else 0.
   */
  uint8_t informative;
  double probability_informative;
  /**
   * Bit `i` is set when category `i` (A = 0 ... I = 8) applies.
   * Always 0 for messages the gate rejected.
   */
  uint32_t actions;
} CtClassification;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Load a pipeline.
 *
 * `embedding_dimension` of 0 selects the default (25). On success `*out`
 * receives a handle owned by the caller.
 *
 * # Safety
 * Path arguments must be null or nul-terminated strings; `out` must be null
 * or point to writable storage for one pointer.
 */
enum CtStatus ct_pipeline_open(const char *informativeness_model,
                               const char *actionability_model,
                               const char *embeddings,
                               size_t embedding_dimension,
                               double threshold,
                               struct CtPipeline **out);

/**
 * Release a pipeline. Null is ignored.
 *
 * # Safety
 * `pipeline` must be null or a handle from [`ct_pipeline_open`] that has not
 * been freed.
 */
void ct_pipeline_free(struct CtPipeline *pipeline);

/**
 * # Safety
 * `pipeline` must be null or a live handle.
 */
enum CtStatus ct_pipeline_set_threshold(struct CtPipeline *pipeline, double threshold);

/**
 * Messages that have reached the actionability stage through this handle.
 * Returns 0 for a null handle.
 *
 * # Safety
 * `pipeline` must be null or a live handle.
 */
size_t ct_pipeline_actionability_calls(const struct CtPipeline *pipeline);

/**
 * Classify one message text.
 *
 * # Safety
 * `pipeline` must be null or a live handle, `text` null or a nul-terminated
 * string, and `out` null or writable.
 */
enum CtStatus ct_classify(const struct CtPipeline *pipeline,
                          const char *text,
                          struct CtClassification *out);

/**
 * Classify one message and render the result as a JSON object
 * `{"id", "informative", "p", "actions"}`, the same shape the command line
 * writes. Free `*out` with [`ct_string_free`].
 *
 * # Safety
 * As for [`ct_classify`]; `id` must be null or a nul-terminated string.
 */
enum CtStatus ct_classify_json(const struct CtPipeline *pipeline,
                               const char *id,
                               const char *text,
                               char **out);

/**
 * Release a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a string from this library that has not been freed.
 */
void ct_string_free(char *s);

/**
 * Description of the last failure on this thread, or null if none. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *ct_last_error(void);

/**
 * Letter code (A to I) of category `index`, or 0 when out of range.
 */
char ct_category_code(uint32_t index);

/**
 * Static name of category `index`, or null when out of range.
 */
const char *ct_category_name(uint32_t index);

/**
 * Library version as a static string.
 */
const char *ct_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CRISIS_TRIAGE_H */
