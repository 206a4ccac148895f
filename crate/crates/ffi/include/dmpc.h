#ifndef DMPC_H
#define DMPC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum DmpcStatus {
  DMPC_STATUS_OK = 0,
  DMPC_STATUS_NULL_POINTER = 1,
  DMPC_STATUS_INVALID_ARGUMENT = 2,
  DMPC_STATUS_IO = 3,
  DMPC_STATUS_PARSE = 4,
  DMPC_STATUS_RUN_FAILED = 5,
  DMPC_STATUS_PANIC = 6,
} DmpcStatus;

/**
 * Opaque run report handle.
 */
typedef struct DmpcReport DmpcReport;

/**
 * Opaque scenario handle.
 */
typedef struct DmpcScenario DmpcScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static NUL-terminated string.
 */
const char *dmpc_version(void);

/**
 * Message of the last failed call on this thread, or null.
 *
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *dmpc_last_error_message(void);

/**
 * Parses a scenario from TOML text.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum DmpcStatus dmpc_scenario_from_str(const char *text, struct DmpcScenario **out);

/**
 * Loads a scenario file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum DmpcStatus dmpc_scenario_from_file(const char *path, struct DmpcScenario **out);

/**
 * Sets one scalar field, e.g. `"admm.rho=5"`. The scenario is unchanged on failure.
 *
 * # Safety
 * `scenario` must come from this library; `assignment` must be NUL-terminated.
 */
enum DmpcStatus dmpc_scenario_set(struct DmpcScenario *scenario, const char *assignment);

/**
 * Number of agents in the scenario.
 *
 * # Safety
 * `scenario` must come from this library and `out` be a valid pointer.
 */
enum DmpcStatus dmpc_scenario_num_agents(const struct DmpcScenario *scenario, size_t *out);

/**
 * # Safety
 * `scenario` must come from this library or be null; it must not be used afterwards.
 */
void dmpc_scenario_free(struct DmpcScenario *scenario);

/**
 * Runs the closed loop. A report is produced whenever the run finishes,
 * including runs that end without reaching the goals.
 *
 * # Safety
 * `scenario` must come from this library and `out` be a valid pointer.
 */
enum DmpcStatus dmpc_run(const struct DmpcScenario *scenario, struct DmpcReport **out);

/**
 * Whether every agent reached its goal.
 *
 * # Safety
 * `report` must come from this library and `out` be a valid pointer.
 */
enum DmpcStatus dmpc_report_success(const struct DmpcReport *report, bool *out);

/**
 * Number of MPC steps executed.
 *
 * # Safety
 * `report` must come from this library and `out` be a valid pointer.
 */
enum DmpcStatus dmpc_report_steps(const struct DmpcReport *report, size_t *out);

/**
 * Closed-loop cost including the slack penalty.
 *
 * # Safety
 * `report` must come from this library and `out` be a valid pointer.
 */
enum DmpcStatus dmpc_report_cost(const struct DmpcReport *report, double *out);

/**
 * Smallest pairwise infinity-norm distance over the run.
 *
 * # Safety
 * `report` must come from this library and `out` be a valid pointer.
 */
enum DmpcStatus dmpc_report_min_distance(const struct DmpcReport *report, double *out);

/**
 * Largest slack seen in any certificate.
 *
 * # Safety
 * `report` must come from this library and `out` be a valid pointer.
 */
enum DmpcStatus dmpc_report_max_slack(const struct DmpcReport *report, double *out);

/**
 * Mean ADMM rounds per step.
 *
 * # Safety
 * `report` must come from this library and `out` be a valid pointer.
 */
enum DmpcStatus dmpc_report_mean_rounds(const struct DmpcReport *report, double *out);

/**
 * Steps where the hard problem was infeasible.
 *
 * # Safety
 * `report` must come from this library and `out` be a valid pointer.
 */
enum DmpcStatus dmpc_report_infeasibility_events(const struct DmpcReport *report, size_t *out);

/**
 * Writes trace, report, effective scenario and plots into `dir`.
 *
 * # Safety
 * Handles must come from this library; `dir` must be NUL-terminated.
 */
enum DmpcStatus dmpc_report_write(const struct DmpcReport *report,
                                  const struct DmpcScenario *scenario,
                                  const char *dir);

/**
 * # Safety
 * `report` must come from this library or be null; it must not be used afterwards.
 */
void dmpc_report_free(struct DmpcReport *report);

/**
 * Largest distance certified between `point` and the cube of half-width
 * `delta` centred at `center`, both of length `dim`.
 *
 * # Safety
 * `center` and `point` must point to `dim` doubles; `out` must be valid.
 */
enum DmpcStatus dmpc_max_certified_distance(size_t dim,
                                            const double *center,
                                            double delta,
                                            const double *point,
                                            double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DMPC_H */
