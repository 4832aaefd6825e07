#ifndef COTRANS_H
#define COTRANS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code of every fallible call.
 */
typedef enum CtStatus {
  CT_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  CT_STATUS_NULL_ARGUMENT = 1,
  /**
   * Arguments failed validation (bad method name, bad config, ...).
   */
  CT_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Filesystem access failed.
   */
  CT_STATUS_IO = 3,
  /**
   * A file parsed but its contents are invalid.
   */
  CT_STATUS_PARSE = 4,
  /**
   * Planning failed (no path, sampling exhausted).
   */
  CT_STATUS_PLANNING = 5,
  /**
   * The simulation reported an internal error.
   */
  CT_STATUS_RUNTIME = 6,
} CtStatus;

/**
 * Opaque simulator configuration.
 */
typedef struct CtConfig CtConfig;

/**
 * Opaque scenario.
 */
typedef struct CtScenario CtScenario;

/**
 * Run summary returned by value.
 */
typedef struct CtRunMetrics {
  double max_load_length_deviation;
  double mean_load_length_deviation;
  double mean_tracking_error_robot1;
  double mean_tracking_error_robot2;
  /**
   * Simulated duration in seconds.
   */
  double duration;
  uintptr_t steps;
  double follower_converged_fraction;
  bool completed;
} CtRunMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent error on this thread. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *ct_last_error_message(void);

/**
 * Default configuration. Never fails; free with `ct_config_free`.
 */
struct CtConfig *ct_config_default(void);

/**
 * Load a TOML configuration file.
 */
enum CtStatus ct_config_load(const char *path, struct CtConfig **out);

void ct_config_free(struct CtConfig *config);

/**
 * Benchmark scenario with the waypoint count from the configuration.
 */
enum CtStatus ct_scenario_benchmark(const struct CtConfig *config, struct CtScenario **out);

/**
 * Load a scenario file.
 */
enum CtStatus ct_scenario_load(const char *path, struct CtScenario **out);

void ct_scenario_free(struct CtScenario *scenario);

/**
 * Simulate one scenario.
 *
 * `method` is one of "png-lf", "rrt-lf", "slq-mpc". When `csv_path` is
 * non-null the run CSV and its metadata sidecar are written there; when
 * `out_metrics` is non-null the summary is stored through it.
 */
enum CtStatus ct_run(const struct CtScenario *scenario,
                     const struct CtConfig *config,
                     const char *method,
                     uint64_t seed,
                     const char *csv_path,
                     struct CtRunMetrics *out_metrics);

/**
 * Library version as a static string.
 */
const char *ct_version(void);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* COTRANS_H */
