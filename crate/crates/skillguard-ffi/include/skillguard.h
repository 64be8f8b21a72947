#ifndef SKILLGUARD_H
#define SKILLGUARD_H

/* Generated by cbindgen from skillguard-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible function.
 */
typedef enum SgStatus {
  SG_STATUS_OK = 0,
  /**
   * A required pointer argument was NULL.
   */
  SG_STATUS_NULL_ARGUMENT = 1,
  /**
   * An input string was not valid UTF-8.
   */
  SG_STATUS_INVALID_UTF8 = 2,
  /**
   * The directory holds no SKILL.md.
   */
  SG_STATUS_NOT_A_SKILL = 3,
  /**
   * SKILL.md frontmatter is missing, unterminated, or not a flat map.
   */
  SG_STATUS_MALFORMED_FRONTMATTER = 4,
  SG_STATUS_IO = 5,
  /**
   * The scenario file is invalid or referenced undeclared behavior.
   */
  SG_STATUS_SCENARIO = 6,
  /**
   * Internal failure (panic caught at the boundary).
   */
  SG_STATUS_INTERNAL = 7,
} SgStatus;

/**
 * Opaque scan report handle.
 */
typedef struct SgReport SgReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static string; do not free.
 */
const char *sg_version(void);

/**
 * Scans a skill directory. On success writes a report handle to `out`.
 * Pass `max_depth = 0` for the default transitive-reference depth.
 *
 * # Safety
 * `root` must be a valid NUL-terminated path; `out` must be valid for
 * writing one pointer.
 */
enum SgStatus sg_scan_dir(const char *root, uint32_t max_depth, struct SgReport **out);

/**
 * Aggregate risk of a report: 0 info, 1 low, 2 medium, 3 high, 4 critical;
 * -1 when `report` is NULL.
 *
 * # Safety
 * `report` must be NULL or a handle from `sg_scan_dir`.
 */
int32_t sg_report_risk(const struct SgReport *report);

/**
 * Number of findings in a report; 0 when `report` is NULL.
 *
 * # Safety
 * `report` must be NULL or a handle from `sg_scan_dir`.
 */
size_t sg_report_finding_count(const struct SgReport *report);

/**
 * Serializes a report to its stable JSON form.
 *
 * # Safety
 * `report` must be a handle from `sg_scan_dir`; `out` must be valid for
 * writing one pointer. Free the result with `sg_string_free`.
 */
enum SgStatus sg_report_to_json(const struct SgReport *report, char **out);

/**
 * Releases a report handle. NULL is a no-op.
 *
 * # Safety
 * `report` must be NULL or an unreleased handle from `sg_scan_dir`.
 */
void sg_report_free(struct SgReport *report);

/**
 * Renders a skill directory's reference graph as DOT text.
 *
 * # Safety
 * `root` must be a valid NUL-terminated path; `out` must be valid for
 * writing one pointer. Free the result with `sg_string_free`.
 */
enum SgStatus sg_graph_dot(const char *root, uint32_t max_depth, char **out);

/**
 * Runs a scenario file through the simulator. Either out parameter may be
 * NULL when the caller does not need it.
 *
 * # Safety
 * `scenario` must be a valid NUL-terminated path; non-NULL out parameters
 * must be valid for writing one pointer each. Free results with
 * `sg_string_free`.
 */
enum SgStatus sg_simulate_file(const char *scenario,
                               char **out_transcript_json,
                               char **out_verdict_line);

/**
 * Releases a string returned by this library. NULL is a no-op.
 *
 * # Safety
 * `s` must be NULL or an unreleased string from this library.
 */
void sg_string_free(char *s);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* SKILLGUARD_H */
