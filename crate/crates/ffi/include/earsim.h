#ifndef EARSIM_H
#define EARSIM_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EarsimStatus {
  EARSIM_STATUS_OK = 0,
  EARSIM_STATUS_NULL_POINTER = 1,
  EARSIM_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Loss rates were not ascending where a closed form needs them sorted.
   */
  EARSIM_STATUS_UNSORTED = 3,
  /**
   * A trial hit its round cap or broke a protocol invariant.
   */
  EARSIM_STATUS_SIMULATION = 4,
  EARSIM_STATUS_CONFIG = 5,
  EARSIM_STATUS_IO = 6,
  /**
   * The output buffer is too small; the required size was still written.
   */
  EARSIM_STATUS_BUFFER_TOO_SMALL = 7,
  /**
   * No closed form exists for the request.
   */
  EARSIM_STATUS_UNAVAILABLE = 8,
  EARSIM_STATUS_PANIC = 99,
} EarsimStatus;

typedef enum EarsimScheme {
  EARSIM_SCHEME_ARQ = 0,
  EARSIM_SCHEME_NC_ARQ = 1,
  EARSIM_SCHEME_EAR = 2,
} EarsimScheme;

/**
 * Opaque handle to a finished experiment grid.
 */
typedef struct EarsimExperiment EarsimExperiment;

/**
 * Opaque handle to a finished trial.
 */
typedef struct EarsimTrial EarsimTrial;

/**
 * Summary of one finished trial.
 */
typedef struct EarsimTrialStats {
  uint64_t initial_transmissions;
  uint64_t retransmissions;
  uint64_t coded_transmissions;
  uint64_t unwanted_retransmissions;
  uint64_t rounds;
  uint64_t overhead_a_bytes;
  uint64_t overhead_b_bytes;
  double lambda;
  /**
   * 1 when no safety invariant broke and every packet arrived.
   */
  uint8_t clean;
} EarsimTrialStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *earsim_last_error(void);

/**
 * Closed-form retransmissions per delivered packet. Loss rates may be in
 * any order.
 *
 * # Safety
 * `omegas` must point at `receivers` doubles and `out` must be writable.
 */
enum EarsimStatus earsim_lambda(enum EarsimScheme scheme,
                                const double *omegas,
                                size_t receivers,
                                double *out);

/**
 * Packet erasure rate after the default Reed-Solomon and CRC protection.
 *
 * # Safety
 * `out` must be writable.
 */
enum EarsimStatus earsim_ber_to_per(double ber, double *out);

/**
 * Simulates one trial. On success `*out` owns a handle for
 * `earsim_trial_free`.
 *
 * # Safety
 * `omegas` must point at `receivers` doubles and `out` must be writable.
 */
enum EarsimStatus earsim_trial_run(enum EarsimScheme scheme,
                                   const double *omegas,
                                   size_t receivers,
                                   size_t packets,
                                   uint64_t seed,
                                   uint64_t trial,
                                   struct EarsimTrial **out);

/**
 * # Safety
 * `trial` must come from `earsim_trial_run`; `out` must be writable.
 */
enum EarsimStatus earsim_trial_stats(const struct EarsimTrial *trial, struct EarsimTrialStats *out);

/**
 * # Safety
 * `trial` must come from `earsim_trial_run` and not be used afterwards.
 * Null is ignored.
 */
void earsim_trial_free(struct EarsimTrial *trial);

/**
 * Runs an experiment described by TOML text, using the same keys as the
 * command-line config file. On success `*out` owns a handle for
 * `earsim_experiment_free`.
 *
 * # Safety
 * `toml` must be a NUL-terminated string and `out` must be writable.
 */
enum EarsimStatus earsim_experiment_run(const char *toml, struct EarsimExperiment **out);

/**
 * Copies the results CSV, NUL-terminated, into `buf`. `*needed` receives
 * the size including the terminator; pass a null `buf` to query it.
 *
 * # Safety
 * `experiment` must come from `earsim_experiment_run`, `buf` must hold
 * `len` bytes unless null, and `needed` must be writable.
 */
enum EarsimStatus earsim_experiment_csv(const struct EarsimExperiment *experiment,
                                        char *buf,
                                        size_t len,
                                        size_t *needed);

/**
 * # Safety
 * `experiment` must come from `earsim_experiment_run` and not be used
 * afterwards. Null is ignored.
 */
void earsim_experiment_free(struct EarsimExperiment *experiment);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EARSIM_H */
