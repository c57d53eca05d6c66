#ifndef ONTOREC_H
#define ONTOREC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum OntorecStatus {
  ONTOREC_STATUS_OK = 0,
  ONTOREC_STATUS_NULL_POINTER = 1,
  ONTOREC_STATUS_INVALID_UTF8 = 2,
  /**
   * Corpus, acceptance or config could not be loaded.
   */
  ONTOREC_STATUS_LOAD_FAILED = 3,
  /**
   * The request JSON could not be parsed.
   */
  ONTOREC_STATUS_INVALID_REQUEST = 4,
  /**
   * The request was well formed but rejected (bad weights, unknown
   * ontology filter, empty input, ...). The error body is still returned.
   */
  ONTOREC_STATUS_REJECTED = 5,
  ONTOREC_STATUS_PANIC = 6,
} OntorecStatus;

/**
 * Opaque engine handle.
 */
typedef struct OntorecEngine OntorecEngine;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Loads an engine. `acceptance_path` and `config_path` may be null.
 *
 * # Safety
 * String arguments must be null or NUL-terminated; `out` must be writable.
 */
enum OntorecStatus ontorec_engine_load(const char *corpus_path,
                                       const char *acceptance_path,
                                       const char *config_path,
                                       struct OntorecEngine **out);

/**
 * Releases an engine. Null is ignored.
 *
 * # Safety
 * `engine` must come from [`ontorec_engine_load`] and not be used afterwards.
 */
void ontorec_engine_free(struct OntorecEngine *engine);

/**
 * Number of ontologies in the loaded corpus.
 *
 * # Safety
 * `engine` must be a live handle; `out` must be writable.
 */
enum OntorecStatus ontorec_engine_ontology_count(const struct OntorecEngine *engine, size_t *out);

/**
 * Runs one request given as the JSON body accepted by `POST /recommend`.
 * On `Ok` and `Rejected`, `*out_json` receives the response or error body.
 *
 * # Safety
 * `engine` must be a live handle, `request_json` NUL-terminated, `out_json`
 * writable. The handle may be shared across threads.
 */
enum OntorecStatus ontorec_recommend_json(const struct OntorecEngine *engine,
                                          const char *request_json,
                                          char **out_json);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void ontorec_string_free(char *s);

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next call into this library on the same thread.
 */
const char *ontorec_last_error_message(void);

/**
 * Library version, static storage.
 */
const char *ontorec_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ONTOREC_H */
