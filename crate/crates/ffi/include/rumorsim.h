#ifndef RUMORSIM_H
#define RUMORSIM_H

/* Generated by cbindgen from rumorsim-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Protocol code for `protocol` arguments: push.
 */
#define RUMORSIM_PROTOCOL_PUSH 0

/**
 * Protocol code: pull.
 */
#define RUMORSIM_PROTOCOL_PULL 1

/**
 * Protocol code: push&pull.
 */
#define RUMORSIM_PROTOCOL_PUSHPULL 2

/**
 * Status code of every FFI call.
 */
typedef enum RumorsimStatus {
  RUMORSIM_STATUS_OK = 0,
  /**
   * A pointer argument was null.
   */
  RUMORSIM_STATUS_NULL_POINTER = 1,
  /**
   * Parameters violate a documented invariant.
   */
  RUMORSIM_STATUS_INVALID_PARAMS = 2,
  /**
   * Unknown protocol code (use the RUMORSIM_PROTOCOL_* constants).
   */
  RUMORSIM_STATUS_INVALID_PROTOCOL = 3,
  /**
   * A spread exceeded its round budget.
   */
  RUMORSIM_STATUS_ROUND_LIMIT = 4,
  /**
   * Exact oracle requested above its size cap.
   */
  RUMORSIM_STATUS_ORACLE_TOO_LARGE = 5,
  /**
   * The chain cannot progress (p = 0).
   */
  RUMORSIM_STATUS_NON_PROGRESSING = 6,
  /**
   * Too few conditioning events for a conditional estimate.
   */
  RUMORSIM_STATUS_INSUFFICIENT_EVENTS = 7,
  /**
   * An internal invariant failed; the library caught a panic.
   */
  RUMORSIM_STATUS_INTERNAL = 99,
} RumorsimStatus;

/**
 * Model instance (node count and expected-degree parameter). Opaque.
 */
typedef struct RumorsimModel RumorsimModel;

/**
 * Completed spread trace. Opaque; read through the accessor functions.
 */
typedef struct RumorsimTrace RumorsimTrace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string; never freed.
 */
const char *rumorsim_version(void);

/**
 * Create a model with n nodes and edge probability a/n.
 * On success writes a handle to `out`; free it with `rumorsim_model_free`.
 */
enum RumorsimStatus rumorsim_model_new(uint64_t n, double a, struct RumorsimModel **out);

/**
 * Free a model handle. Null is a no-op.
 *
 * # Safety
 * `model` must be a handle returned by `rumorsim_model_new` that has not
 * been freed yet.
 */
void rumorsim_model_free(struct RumorsimModel *model);

/**
 * Asymptotic growth and shrink rates of a protocol at edge parameter a.
 */
enum RumorsimStatus rumorsim_rates(int protocol, double a, double *gamma, double *rho);

/**
 * Leading-order expected spreading time split into growth and shrink terms
 * (the additive O(1) constant is excluded). Requires n >= 3.
 *
 * # Safety
 * `model` must be a live handle from `rumorsim_model_new`.
 */
enum RumorsimStatus rumorsim_predict_expected_time(const struct RumorsimModel *model,
                                                   int protocol,
                                                   double *growth_term,
                                                   double *shrink_term,
                                                   double *total_leading);

/**
 * Exact expected spreading time by exhaustive enumeration (n <= max_n,
 * hard cap 6).
 *
 * # Safety
 * `model` must be a live handle from `rumorsim_model_new`.
 */
enum RumorsimStatus rumorsim_oracle_expected_time(const struct RumorsimModel *model,
                                                  int protocol,
                                                  uint32_t max_n,
                                                  double *out);

/**
 * Run one full spread. `max_rounds` of 0 selects the default budget.
 * On success writes a trace handle to `out`; free it with
 * `rumorsim_trace_free`.
 *
 * # Safety
 * `model` must be a live handle from `rumorsim_model_new`.
 */
enum RumorsimStatus rumorsim_simulate(const struct RumorsimModel *model,
                                      int protocol,
                                      uint64_t master_seed,
                                      uint64_t stream_id,
                                      uint64_t max_rounds,
                                      struct RumorsimTrace **out);

/**
 * Total rounds T of a completed trace.
 *
 * # Safety
 * `trace` must be a live handle from `rumorsim_simulate`.
 */
uint64_t rumorsim_trace_rounds(const struct RumorsimTrace *trace);

/**
 * Number of informed-count entries (T + 1).
 *
 * # Safety
 * `trace` must be a live handle from `rumorsim_simulate`.
 */
size_t rumorsim_trace_len(const struct RumorsimTrace *trace);

/**
 * Copy the informed counts I_0..I_T into `buf`, which must hold at least
 * `rumorsim_trace_len` entries.
 *
 * # Safety
 * `trace` must be a live handle and `buf` must point to `len` writable u32.
 */
enum RumorsimStatus rumorsim_trace_counts(const struct RumorsimTrace *trace,
                                          uint32_t *buf,
                                          size_t len);

/**
 * Free a trace handle. Null is a no-op.
 *
 * # Safety
 * `trace` must be a handle returned by `rumorsim_simulate` that has not
 * been freed yet.
 */
void rumorsim_trace_free(struct RumorsimTrace *trace);

/**
 * Monte Carlo mean spreading time over `trials` seeded runs.
 *
 * # Safety
 * `model` must be a live handle from `rumorsim_model_new`.
 */
enum RumorsimStatus rumorsim_estimate_spreading_time(const struct RumorsimModel *model,
                                                     int protocol,
                                                     uint64_t trials,
                                                     uint64_t master_seed,
                                                     double *mean,
                                                     double *std_error);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RUMORSIM_H */
