/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef SAFESIM_H
#define SAFESIM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum SafesimStatus {
  SAFESIM_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  SAFESIM_STATUS_NULL_POINTER = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  SAFESIM_STATUS_INVALID_UTF8 = 2,
  /**
   * Malformed or inconsistent input: scenario, model, options.
   */
  SAFESIM_STATUS_INVALID_INPUT = 3,
  /**
   * A file could not be read or written.
   */
  SAFESIM_STATUS_IO = 4,
  /**
   * The simulation failed while running.
   */
  SAFESIM_STATUS_RUNTIME = 5,
  /**
   * An internal panic was caught at the boundary.
   */
  SAFESIM_STATUS_PANIC = 6,
} SafesimStatus;

/**
 * The record of one finished simulation.
 */
typedef struct SafesimLog SafesimLog;

/**
 * A trained denoiser.
 */
typedef struct SafesimModel SafesimModel;

/**
 * A validated scenario.
 */
typedef struct SafesimScenario SafesimScenario;

/**
 * Simulation options. Obtain defaults from `safesim_sim_options_default`.
 */
typedef struct SafesimSimOptions {
  uint64_t seed;
  /**
   * Samples per agent per replanning tick.
   */
  uint32_t num_samples;
  /**
   * Run length in seconds; zero or less uses the scenario horizon.
   */
  double max_duration;
  /**
   * Seed adversaries from trajectory proposals.
   */
  bool use_proposals;
} SafesimSimOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread, or null after a
 * success. Valid until the next call into the library on the same thread.
 */
const char *safesim_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *safesim_version(void);

/**
 * Loads and validates a scenario file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` valid for one write.
 */
enum SafesimStatus safesim_scenario_load(const char *path, struct SafesimScenario **out);

/**
 * Parses and validates a scenario from JSON text.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` valid for one write.
 */
enum SafesimStatus safesim_scenario_from_json(const char *json, struct SafesimScenario **out);

/**
 * Number of agents in the scenario, ego included.
 *
 * # Safety
 * `scenario` must be a live handle and `out` valid for one write.
 */
enum SafesimStatus safesim_scenario_agent_count(const struct SafesimScenario *scenario,
                                                size_t *out);

/**
 * Releases a scenario. Null is ignored.
 *
 * # Safety
 * `scenario` must be null or a handle not yet freed.
 */
void safesim_scenario_free(struct SafesimScenario *scenario);

/**
 * Loads a trained model file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` valid for one write.
 */
enum SafesimStatus safesim_model_load(const char *path, struct SafesimModel **out);

/**
 * Releases a model. Null is ignored.
 *
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void safesim_model_free(struct SafesimModel *model);

/**
 * Default simulation options.
 */
struct SafesimSimOptions safesim_sim_options_default(void);

/**
 * Runs one closed-loop simulation.
 *
 * # Safety
 * `scenario` and `model` must be live handles, `options` null or valid,
 * and `out` valid for one write. Null `options` means the defaults.
 */
enum SafesimStatus safesim_simulate(const struct SafesimScenario *scenario,
                                    const struct SafesimModel *model,
                                    const struct SafesimSimOptions *options,
                                    struct SafesimLog **out);

/**
 * Number of executed steps in the log, excluding the initial state.
 *
 * # Safety
 * `log` must be a live handle and `out` valid for one write.
 */
enum SafesimStatus safesim_log_step_count(const struct SafesimLog *log, size_t *out);

/**
 * Whether the ego and an adversary collided, and when (seconds). The time
 * is written only on a collision.
 *
 * # Safety
 * `log` must be a live handle; `collided` valid for one write; `time` null
 * or valid for one write.
 */
enum SafesimStatus safesim_log_collision(const struct SafesimLog *log,
                                         bool *collided,
                                         double *time);

/**
 * Writes the log as JSON lines to `path`.
 *
 * # Safety
 * `log` must be a live handle and `path` a NUL-terminated string.
 */
enum SafesimStatus safesim_log_save(const struct SafesimLog *log, const char *path);

/**
 * Serializes the log as JSON lines into a new string owned by the caller.
 *
 * # Safety
 * `log` must be a live handle and `out` valid for one write.
 */
enum SafesimStatus safesim_log_to_jsonl(const struct SafesimLog *log, char **out);

/**
 * Releases a log. Null is ignored.
 *
 * # Safety
 * `log` must be null or a handle not yet freed.
 */
void safesim_log_free(struct SafesimLog *log);

/**
 * Releases a string returned by the library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a string from this library not yet freed.
 */
void safesim_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SAFESIM_H */
