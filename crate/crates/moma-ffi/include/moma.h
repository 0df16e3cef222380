#ifndef MOMA_H
#define MOMA_H

/* Generated by cbindgen from moma-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Routing preference selector.
 */
typedef enum {
  MOMA_PREFERENCE_COST = 0,
  MOMA_PREFERENCE_AUTO = 1,
  MOMA_PREFERENCE_PERFORMANCE = 2,
} MomaPreference;

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum {
  MOMA_STATUS_OK = 0,
  /**
   * A required pointer was null or a string was not valid UTF-8.
   */
  MOMA_STATUS_INVALID_ARGUMENT = 1,
  /**
   * A data file failed to parse or verify.
   */
  MOMA_STATUS_DATA_FORMAT = 2,
  /**
   * Invalid or incomplete configuration.
   */
  MOMA_STATUS_CONFIG = 3,
  /**
   * Routing failed (for example, an infeasible budget with no fallback).
   */
  MOMA_STATUS_ROUTING = 4,
  /**
   * Unexpected internal failure; details via `moma_last_error`.
   */
  MOMA_STATUS_INTERNAL = 5,
} MomaStatus;

/**
 * Opaque handle around a loaded gateway.
 */
typedef struct MomaEngine MomaEngine;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static string; do not free.
 */
const char *moma_version(void);

/**
 * Create an engine from a config file. `config_path` may be null, in which
 * case `MOMA_CONFIG` or built-in defaults apply (the config must still name
 * a model catalog under `[paths]`).
 *
 * # Safety
 * `config_path` must be null or a valid NUL-terminated path string, and
 * `out_engine` must be a valid pointer to writable storage.
 */
MomaStatus moma_engine_new(const char *config_path, MomaEngine **out_engine);

/**
 * Destroy an engine created by [`moma_engine_new`]. Null is a no-op.
 *
 * # Safety
 * `engine` must be null or a pointer previously returned by
 * [`moma_engine_new`] that has not been freed yet.
 */
void moma_engine_free(MomaEngine *engine);

/**
 * Route a query. `budget` (a decimal string) is only honored for the cost
 * preference and may be null. On success `*out_json` holds the full routing
 * decision; free it with [`moma_string_free`].
 *
 * # Safety
 * `engine` must be a live engine pointer; `query` a valid NUL-terminated
 * string; `budget` null or valid; `out_json` a valid writable pointer.
 */
MomaStatus moma_route(MomaEngine *engine,
                      const char *query,
                      MomaPreference preference,
                      const char *budget,
                      char **out_json);

/**
 * Register an agent descriptor (a single JSON object) into the live engine.
 * On success `*out_json` describes the outcome; free with
 * [`moma_string_free`].
 *
 * # Safety
 * `engine` must be a live engine pointer; `descriptor_json` a valid
 * NUL-terminated string; `out_json` a valid writable pointer.
 */
MomaStatus moma_register_agent(MomaEngine *engine, const char *descriptor_json, char **out_json);

/**
 * Cache statistics as JSON; free with [`moma_string_free`].
 *
 * # Safety
 * `engine` must be a live engine pointer and `out_json` a valid writable
 * pointer.
 */
MomaStatus moma_cache_stats(MomaEngine *engine, char **out_json);

/**
 * Free a string allocated by this library. Null is a no-op.
 *
 * # Safety
 * `s` must be null or a pointer previously returned through an `out_json`
 * parameter or [`moma_last_error`], not yet freed.
 */
void moma_string_free(char *s);

/**
 * Message of the most recent error on this thread, or null when none.
 * The caller owns the returned string; free with [`moma_string_free`].
 */
char *moma_last_error(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MOMA_H */
