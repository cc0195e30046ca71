#ifndef LATRA_H
#define LATRA_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. The first three match the command line's exit codes.
 */
typedef enum LatraStatus {
  LATRA_STATUS_OK = 0,
  LATRA_STATUS_ALARM = 1,
  LATRA_STATUS_DEADLOCK = 2,
  LATRA_STATUS_INVALID_ARGUMENT = 3,
  LATRA_STATUS_PARSE_ERROR = 4,
  LATRA_STATUS_COMPILE_ERROR = 5,
  LATRA_STATUS_BUDGET_EXHAUSTED = 6,
  LATRA_STATUS_PROPERTY_ERROR = 7,
  LATRA_STATUS_INTERNAL = 8,
} LatraStatus;

typedef enum LatraDomain {
  LATRA_DOMAIN_INTERVAL = 0,
  LATRA_DOMAIN_AFFINE = 1,
} LatraDomain;

/**
 * A compiled program.
 */
typedef struct LatraProgram LatraProgram;

/**
 * A computed reachability set, with the program it belongs to.
 */
typedef struct LatraResult LatraResult;

/**
 * Fixpoint parameters; see [`latra_config_default`].
 */
typedef struct LatraConfig {
  uint32_t widening_delay;
  uint32_t shape_k;
  uint32_t step_budget;
} LatraConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * The message of the last failed call on this thread; empty after a
 * successful call. Valid until the next call on the same thread.
 */
const char *latra_last_error(void);

struct LatraConfig latra_config_default(void);

/**
 * Parses and compiles `source`. `procs` is the initial number of
 * processes; 0 means unbounded.
 *
 * # Safety
 * `source` must be a NUL-terminated string and `out` a valid pointer.
 */
enum LatraStatus latra_program_compile(const char *source,
                                       enum LatraDomain domain,
                                       uint32_t procs,
                                       struct LatraProgram **out);

/**
 * # Safety
 * `program` must come from [`latra_program_compile`] or be null.
 */
void latra_program_free(struct LatraProgram *program);

/**
 * Computes the reachability set. A null `config` uses the defaults.
 *
 * # Safety
 * `program` must be a live handle, `config` null or valid, and `out` a
 * valid pointer.
 */
enum LatraStatus latra_analyze(const struct LatraProgram *program,
                               const struct LatraConfig *config,
                               struct LatraResult **out);

/**
 * # Safety
 * `result` must come from [`latra_analyze`] or be null.
 */
void latra_result_free(struct LatraResult *result);

/**
 * Writes the iteration count and the size of the reach automaton. Any
 * output pointer may be null.
 *
 * # Safety
 * `result` must be a live handle.
 */
enum LatraStatus latra_result_stats(const struct LatraResult *result,
                                    size_t *iterations,
                                    size_t *nodes,
                                    size_t *transitions);

/**
 * Checks a bad-configuration automaton in the property file format.
 * Returns `Ok` when no bad configuration is reachable and `Alarm`
 * otherwise; with a non-null `witness` the alarm's shortest word is
 * stored there (null when safe).
 *
 * # Safety
 * `result` must be a live handle, `property` a NUL-terminated string and
 * `witness` null or valid.
 */
enum LatraStatus latra_check_property(const struct LatraResult *result,
                                      const char *property,
                                      char **witness);

/**
 * Looks for potential deadlocks. Returns `Deadlock` when any is found;
 * `count` receives their number and `witnesses` one line per deadlock.
 *
 * # Safety
 * `result` must be a live handle; output pointers null or valid.
 */
enum LatraStatus latra_check_deadlock(const struct LatraResult *result,
                                      size_t *count,
                                      char **witnesses);

/**
 * The reach automaton in Graphviz format, or null on failure.
 *
 * # Safety
 * `result` must be a live handle.
 */
char *latra_result_dot(const struct LatraResult *result);

/**
 * # Safety
 * `s` must be a string returned by this library, or null.
 */
void latra_string_free(char *s);

/**
 * Library version, statically allocated.
 */
const char *latra_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LATRA_H */
