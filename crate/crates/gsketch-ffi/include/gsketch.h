#ifndef GSKETCH_H
#define GSKETCH_H

/* Generated by cbindgen from gsketch-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Aggregates supported for subgraph queries.
 */
typedef enum GsAggregate {
  GS_AGGREGATE_SUM = 0,
  GS_AGGREGATE_MIN = 1,
  GS_AGGREGATE_AVERAGE = 2,
} GsAggregate;

/**
 * Which engine inside the snapshot answers queries.
 */
typedef enum GsEngineKind {
  /**
   * The partitioned engine.
   */
  GS_ENGINE_KIND_PARTITIONED = 0,
  /**
   * The single-sketch baseline (present only when the snapshot was
   * written with one).
   */
  GS_ENGINE_KIND_GLOBAL = 1,
} GsEngineKind;

/**
 * Status codes returned by every fallible function.
 */
typedef enum GsStatus {
  GS_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  GS_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8 or not a valid vertex label.
   */
  GS_STATUS_BAD_LABEL = 2,
  /**
   * The snapshot file could not be read or parsed.
   */
  GS_STATUS_BAD_SNAPSHOT = 3,
  /**
   * The requested engine is not present in the snapshot.
   */
  GS_STATUS_NO_SUCH_ENGINE = 4,
  /**
   * The query was structurally invalid (empty, bad aggregate).
   */
  GS_STATUS_BAD_QUERY = 5,
} GsStatus;

/**
 * Opaque handle to a loaded snapshot.
 */
typedef struct GsEngine GsEngine;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Opens a snapshot file written by the `gsketch ingest` pipeline.
 *
 * On success writes a handle through `out` and returns `GS_STATUS_OK`.
 * The handle must be released with `gs_engine_free`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum GsStatus gs_engine_open_snapshot(const char *path, struct GsEngine **out);

/**
 * Estimates the frequency of the edge (src, dst); never underestimates.
 *
 * # Safety
 * `engine` must come from `gs_engine_open_snapshot` and not yet be freed;
 * `src` and `dst` must be NUL-terminated; `out` must be valid.
 */
enum GsStatus gs_engine_estimate_edge(const struct GsEngine *engine,
                                      enum GsEngineKind kind,
                                      const char *src,
                                      const char *dst,
                                      uint64_t *out);

/**
 * Estimates an aggregate over the per-edge estimates of a subgraph given
 * as parallel src/dst arrays of length `len`. The result is written as a
 * double because AVERAGE is fractional.
 *
 * # Safety
 * `srcs` and `dsts` must point to `len` NUL-terminated strings; other
 * pointer requirements as in `gs_engine_estimate_edge`.
 */
enum GsStatus gs_engine_estimate_subgraph(const struct GsEngine *engine,
                                          enum GsEngineKind kind,
                                          const char *const *srcs,
                                          const char *const *dsts,
                                          uintptr_t len,
                                          enum GsAggregate aggregate,
                                          double *out);

/**
 * Total frequency mass ingested into the partitioned engine.
 *
 * # Safety
 * `engine` and `out` as in `gs_engine_estimate_edge`.
 */
enum GsStatus gs_engine_ingested_mass(const struct GsEngine *engine, uint64_t *out);

/**
 * Releases a handle. Passing null is a no-op.
 *
 * # Safety
 * `engine` must come from `gs_engine_open_snapshot` and not be used again.
 */
void gs_engine_free(struct GsEngine *engine);

/**
 * Library version as a static NUL-terminated string.
 */
const char *gs_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GSKETCH_H */
