#ifndef STACKMORSE_H
#define STACKMORSE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define STACKMORSE_TASK_ANALYZE 1

#define STACKMORSE_TASK_FLOW (1 << 1)

#define STACKMORSE_TASK_COMPLEX (1 << 2)

#define STACKMORSE_TASK_INEQUALITIES (1 << 3)

#define STACKMORSE_TASK_VERIFY (1 << 4)

typedef enum StackmorseStatus {
  STACKMORSE_STATUS_OK = 0,
  STACKMORSE_STATUS_NULL_ARGUMENT = 1,
  STACKMORSE_STATUS_INVALID_UTF8 = 2,
  STACKMORSE_STATUS_IO = 3,
  STACKMORSE_STATUS_PARSE = 4,
  STACKMORSE_STATUS_VALIDATION = 5,
  STACKMORSE_STATUS_OUT_OF_RANGE = 6,
  STACKMORSE_STATUS_PANIC = 7,
} StackmorseStatus;

typedef enum StackmorseFormat {
  STACKMORSE_FORMAT_JSON = 0,
  STACKMORSE_FORMAT_CSV = 1,
  STACKMORSE_FORMAT_TEXT = 2,
} StackmorseFormat;

/**
 * The result of running a scenario.
 */
typedef struct StackmorseReport StackmorseReport;

/**
 * A parsed and validated scenario.
 */
typedef struct StackmorseScenario StackmorseScenario;

/**
 * One row of the critical inventory. Counts that are infinite or not
 * defined are reported as -1.
 */
typedef struct StackmorseOrbit {
  double value;
  uint32_t index;
  int32_t stacky_index;
  uint32_t orbit_dim;
  int64_t orbit_size;
  int64_t isotropy_order;
  uint32_t isotropy_dim;
  bool nondegenerate;
  bool orientable;
} StackmorseOrbit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses and validates a TOML scenario.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum StackmorseStatus stackmorse_scenario_from_toml(const char *text,
                                                    struct StackmorseScenario **out);

/**
 * Parses and validates a JSON scenario.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum StackmorseStatus stackmorse_scenario_from_json(const char *text,
                                                    struct StackmorseScenario **out);

/**
 * Loads a scenario file; `.json` files are read as JSON, anything else as
 * TOML.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum StackmorseStatus stackmorse_scenario_load(const char *path, struct StackmorseScenario **out);

/**
 * # Safety
 * `scenario` must be null or a handle from this library not yet freed.
 */
void stackmorse_scenario_free(struct StackmorseScenario *scenario);

/**
 * Runs a scenario. `tasks` is a bit mask of `STACKMORSE_TASK_*`; 0 runs the
 * tasks listed in the scenario. The seed overrides the scenario seed only
 * when `use_seed` is true.
 *
 * # Safety
 * `scenario` must be a live handle and `out` a valid pointer.
 */
enum StackmorseStatus stackmorse_run(const struct StackmorseScenario *scenario,
                                     uint32_t tasks,
                                     bool use_seed,
                                     uint64_t seed,
                                     struct StackmorseReport **out);

/**
 * # Safety
 * `report` must be null or a handle from this library not yet freed.
 */
void stackmorse_report_free(struct StackmorseReport *report);

/**
 * True when every recorded check passed. A null handle reports false.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
bool stackmorse_report_passed(const struct StackmorseReport *report);

/**
 * # Safety
 * `report` must be null or a live handle.
 */
size_t stackmorse_report_orbit_count(const struct StackmorseReport *report);

/**
 * # Safety
 * `report` must be a live handle and `out` a valid pointer.
 */
enum StackmorseStatus stackmorse_report_orbit(const struct StackmorseReport *report,
                                              size_t i,
                                              struct StackmorseOrbit *out);

/**
 * Morse polynomial coefficients, lowest degree first. Pass a null `buf` to
 * query the length.
 *
 * # Safety
 * `buf` must be null or point to `len` writable values.
 */
int64_t stackmorse_report_morse_polynomial(const struct StackmorseReport *report,
                                           int64_t *buf,
                                           size_t len);

/**
 * Total cohomology ranks of the nerve double complex.
 *
 * # Safety
 * `buf` must be null or point to `len` writable values.
 */
int64_t stackmorse_report_total_cohomology(const struct StackmorseReport *report,
                                           uint64_t *buf,
                                           size_t len);

/**
 * Renders the report. The string must be released with
 * [`stackmorse_string_free`]. Returns null on failure.
 *
 * # Safety
 * `report` must be a live handle.
 */
char *stackmorse_report_render(const struct StackmorseReport *report, enum StackmorseFormat format);

/**
 * # Safety
 * `s` must be null or a string returned by this library not yet freed.
 */
void stackmorse_string_free(char *s);

/**
 * Message for the last failure on this thread, or null. The pointer stays
 * valid until the next call into this library from the same thread.
 */
const char *stackmorse_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *stackmorse_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STACKMORSE_H */
