#ifndef TATE_H
#define TATE_H

/* generated by cbindgen from the tate-ffi crate; do not edit */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define TATE_OK 0

#define TATE_CHECK_FAILED 1

#define TATE_SCHEMA_ERROR 2

#define TATE_WINDOW_TOO_SMALL 3

#define TATE_INTERNAL_ERROR 4

/**
 * Opaque handle over a parsed and validated job document.
 */
typedef struct TateJob TateJob;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Version of the engine as a static string; do not free.
 */
const char *tate_version(void);

/**
 * Message for the most recent failure on this thread, or NULL. Valid
 * until the next engine call on the same thread; do not free.
 */
const char *tate_last_error(void);

/**
 * Parse and validate a JSON job document. On success writes a handle to
 * `out`; release it with [`tate_job_free`].
 *
 * # Safety
 * `json` must be a valid NUL-terminated string and `out` a valid pointer.
 */
int32_t tate_job_parse(const char *json, struct TateJob **out);

/**
 * Run one command (`closure`, `model`, `compare`, `pi`, `deviations`,
 * `classify`, `betti`, `poincare`, `check-all`, `run`) against a parsed
 * job. On success writes the structured report to `report_out`; release
 * it with [`tate_string_free`]. A status of `TATE_CHECK_FAILED` still
 * carries a report.
 *
 * # Safety
 * `job` must come from [`tate_job_parse`]; `command` must be a valid
 * NUL-terminated string; `report_out` may be NULL when the caller only
 * wants the status.
 */
int32_t tate_job_run(const struct TateJob *job, const char *command, char **report_out);

/**
 * One-shot convenience: parse, run, and free in a single call.
 *
 * # Safety
 * As for [`tate_job_parse`] and [`tate_job_run`].
 */
int32_t tate_run_document(const char *json, const char *command, char **report_out);

/**
 * Release a job handle from [`tate_job_parse`].
 *
 * # Safety
 * `job` must be a handle from [`tate_job_parse`], released at most once.
 */
void tate_job_free(struct TateJob *job);

/**
 * Release a string returned by the engine.
 *
 * # Safety
 * `s` must be a string returned by this library, released at most once.
 */
void tate_string_free(char *s);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* TATE_H */
