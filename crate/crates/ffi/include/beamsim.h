#ifndef BEAMSIM_H
#define BEAMSIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum {
  BEAMSIM_STATUS_OK = 0,
  /**
   * A required pointer was NULL.
   */
  BEAMSIM_STATUS_NULL_POINTER = 1,
  /**
   * An argument was out of range or a string was not UTF-8.
   */
  BEAMSIM_STATUS_INVALID_ARGUMENT = 2,
  /**
   * A config failed to parse or validate.
   */
  BEAMSIM_STATUS_CONFIG = 3,
  BEAMSIM_STATUS_IO = 4,
  /**
   * Any other library error.
   */
  BEAMSIM_STATUS_RUNTIME = 5,
  /**
   * The library panicked; the handle involved should not be reused.
   */
  BEAMSIM_STATUS_PANIC = 6,
} BeamsimStatus;

/**
 * A fixed channel: per-node gains and phases plus transmit power.
 */
typedef struct BeamsimChannel BeamsimChannel;

/**
 * A validated list of experiments.
 */
typedef struct BeamsimSuite BeamsimSuite;

/**
 * One trial of one experiment, advanced a slot at a time.
 */
typedef struct BeamsimTrial BeamsimTrial;

/**
 * One row of a trial trace.
 */
typedef struct {
  uint32_t trial;
  uint64_t slot;
  double rss;
  double rss_max;
  double ratio;
  size_t n_active;
} BeamsimRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *beamsim_last_error(void);

/**
 * Library version as a static string.
 */
const char *beamsim_version(void);

/**
 * Frees a string returned by this library.
 *
 * # Safety
 * `s` must be NULL or a pointer obtained from this library and not yet
 * freed.
 */
void beamsim_string_free(char *s);

/**
 * Solves for the misalignment and gain from readings at the kept phase,
 * rotated by pi, and rotated by pi/2.
 *
 * # Safety
 * Out-pointers must be NULL or valid for writes; `beta` and `t_mag` are
 * required.
 */
BeamsimStatus beamsim_solve_three(double m1,
                                  double m2,
                                  double m3,
                                  double tx_power,
                                  double *beta,
                                  double *t_mag,
                                  bool *degenerate);

/**
 * Recovers `|beta|` from two readings and a known gain.
 *
 * # Safety
 * `beta_mag` must be valid for writes; `degenerate` may be NULL.
 */
BeamsimStatus beamsim_solve_two(double m1,
                                double m2,
                                double t_mag,
                                double tx_power,
                                double *beta_mag,
                                bool *degenerate);

/**
 * Quantizes `beta` to `bits` bits. Inside the dead zone `*sent` is false
 * and `*value` is 0.
 *
 * # Safety
 * `value` and `sent` must be valid for writes.
 */
BeamsimStatus beamsim_quantize(double beta,
                               uint8_t bits,
                               double dead_zone_factor,
                               double *value,
                               bool *sent);

/**
 * Creates a channel of `n` nodes.
 *
 * # Safety
 * `gains` and `phases` must point to `n` doubles; `out` must be valid for
 * writes.
 */
BeamsimStatus beamsim_channel_new(const double *gains,
                                  const double *phases,
                                  size_t n,
                                  double tx_power,
                                  BeamsimChannel **out_channel);

/**
 * # Safety
 * `channel` must be NULL or a live handle from [`beamsim_channel_new`].
 */
void beamsim_channel_free(BeamsimChannel *channel);

/**
 * Noiseless RSS for the given transmitter phase offsets.
 *
 * # Safety
 * `phases` must point to `n` doubles, `n` matching the channel size.
 */
BeamsimStatus beamsim_channel_rss(const BeamsimChannel *channel,
                                  const double *phases,
                                  size_t n,
                                  double *rss);

/**
 * RSS with every node aligned.
 *
 * # Safety
 * `channel` must be a live handle; `rss` valid for writes.
 */
BeamsimStatus beamsim_channel_rss_max(const BeamsimChannel *channel, double *rss);

/**
 * Parses a config (single experiment or suite) from JSON text.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out_suite` valid for writes.
 */
BeamsimStatus beamsim_suite_parse(const char *json, BeamsimSuite **out_suite);

/**
 * Loads a bundled preset by name.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out_suite` valid for writes.
 */
BeamsimStatus beamsim_suite_preset(const char *name, BeamsimSuite **out_suite);

/**
 * # Safety
 * `suite` must be NULL or a live suite handle.
 */
void beamsim_suite_free(BeamsimSuite *suite);

/**
 * Number of experiments in the suite, 0 for NULL.
 *
 * # Safety
 * `suite` must be NULL or a live suite handle.
 */
size_t beamsim_suite_len(const BeamsimSuite *suite);

/**
 * Overrides seed, trial count and slot budget of every run. Negative
 * values (or 0 for counts) leave a field unchanged.
 *
 * # Safety
 * `suite` must be a live suite handle.
 */
BeamsimStatus beamsim_suite_override(BeamsimSuite *suite,
                                     int64_t seed,
                                     int64_t trials,
                                     int64_t budget);

/**
 * Runs every experiment and writes summaries, traces and the plot under
 * `out_dir`.
 *
 * # Safety
 * `suite` must be a live handle and `out_dir` a NUL-terminated path.
 */
BeamsimStatus beamsim_suite_run(const BeamsimSuite *suite, const char *out_dir);

/**
 * Names of the bundled presets, one per line. Free with
 * [`beamsim_string_free`].
 */
char *beamsim_presets(void);

/**
 * Starts trial `trial` of experiment `run` of the suite. The trial keeps
 * its own copy of the config.
 *
 * # Safety
 * `suite` must be a live handle; `out_trial` valid for writes.
 */
BeamsimStatus beamsim_trial_new(const BeamsimSuite *suite,
                                size_t run,
                                uint32_t trial,
                                BeamsimTrial **out_trial);

/**
 * # Safety
 * `trial` must be NULL or a live trial handle.
 */
void beamsim_trial_free(BeamsimTrial *trial);

/**
 * Runs one slot and writes its trace row.
 *
 * # Safety
 * `trial` must be a live handle; `record` valid for writes.
 */
BeamsimStatus beamsim_trial_step(BeamsimTrial *trial, BeamsimRecord *record);

/**
 * Algorithm stage of the last slot run, "" before the first. Valid until
 * the next step or free.
 *
 * # Safety
 * `trial` must be NULL or a live handle.
 */
const char *beamsim_trial_stage(const BeamsimTrial *trial);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BEAMSIM_H */
