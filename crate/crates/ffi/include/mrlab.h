#ifndef MRLAB_H
#define MRLAB_H

#pragma once

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum MrlabStatus {
  MRLAB_STATUS_OK = 0,
  MRLAB_STATUS_NULL_POINTER = 1,
  MRLAB_STATUS_INVALID_UTF8 = 2,
  MRLAB_STATUS_CONFIG = 3,
  MRLAB_STATUS_DIMENSION = 4,
  MRLAB_STATUS_INVALID = 5,
  MRLAB_STATUS_GRID_RULE = 6,
  MRLAB_STATUS_MARGIN = 7,
  MRLAB_STATUS_TRUNCATION = 8,
  MRLAB_STATUS_IO = 9,
  MRLAB_STATUS_SERDE = 10,
  MRLAB_STATUS_NUMERIC = 11,
  MRLAB_STATUS_PANIC = 12,
} MrlabStatus;

/**
 * An orthonormal-or-oblique frame of unit normals.
 */
typedef struct MrlabFrame MrlabFrame;

/**
 * An experiment report.
 */
typedef struct MrlabReport MrlabReport;

/**
 * A validated scenario configuration.
 */
typedef struct MrlabScenario MrlabScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the next failing call.
 */
const char *mrlab_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *mrlab_version(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void mrlab_string_free(char *s);

/**
 * Builds a frame from `dim` unit normals stored row by row in `normals` (dim * dim values).
 *
 * # Safety
 * `normals` must point to dim * dim doubles; `out` must be writable.
 */
enum MrlabStatus mrlab_frame_new(const double *normals,
                                 uintptr_t dim,
                                 double nu,
                                 struct MrlabFrame **out);

/**
 * |det(N_1, .., N_{n+1})|.
 *
 * # Safety
 * `frame` must be a live handle and `out` writable.
 */
enum MrlabStatus mrlab_frame_transversality(const struct MrlabFrame *frame, double *out);

/**
 * # Safety
 * `frame` must come from [`mrlab_frame_new`] and not have been freed.
 */
void mrlab_frame_free(struct MrlabFrame *frame);

/**
 * Sum of the windows chi_q(y) over the induced lattice of hyperplane `i` at scale `r`, with
 * |j - j0| <= `truncation`; fails when the modeled tail exceeds `tol`.
 *
 * # Safety
 * `frame` must be live, `y` must hold `y_len` doubles and `out` must be writable.
 */
enum MrlabStatus mrlab_partition_sum(const struct MrlabFrame *frame,
                                     uintptr_t i,
                                     double r,
                                     const double *y,
                                     uintptr_t y_len,
                                     uintptr_t truncation,
                                     double tol,
                                     double *out);

/**
 * Parses and validates a TOML scenario.
 *
 * # Safety
 * `toml` must be a NUL-terminated string and `out` writable.
 */
enum MrlabStatus mrlab_scenario_from_toml(const char *toml, struct MrlabScenario **out);

/**
 * Replaces the seed of a scenario.
 *
 * # Safety
 * `scenario` must be a live handle.
 */
enum MrlabStatus mrlab_scenario_set_seed(struct MrlabScenario *scenario, uint64_t seed);

/**
 * # Safety
 * `scenario` must come from [`mrlab_scenario_from_toml`] and not have been freed.
 */
void mrlab_scenario_free(struct MrlabScenario *scenario);

/**
 * Runs an experiment by its CLI name (`sweep-ar`, `offdiag`, ...).
 *
 * # Safety
 * `scenario` must be live, `experiment` NUL-terminated and `out` writable.
 */
enum MrlabStatus mrlab_run(const struct MrlabScenario *scenario,
                           const char *experiment,
                           struct MrlabReport **out);

/**
 * Whether every contract of the report passed.
 *
 * # Safety
 * `report` must be live and `out` writable.
 */
enum MrlabStatus mrlab_report_passed(const struct MrlabReport *report, bool *out);

/**
 * The report as JSON; free the string with [`mrlab_string_free`].
 *
 * # Safety
 * `report` must be live and `out` writable.
 */
enum MrlabStatus mrlab_report_to_json(const struct MrlabReport *report, char **out);

/**
 * The record table as CSV; free the string with [`mrlab_string_free`].
 *
 * # Safety
 * `report` must be live and `out` writable.
 */
enum MrlabStatus mrlab_report_to_csv(const struct MrlabReport *report, char **out);

/**
 * # Safety
 * `report` must come from [`mrlab_run`] and not have been freed.
 */
void mrlab_report_free(struct MrlabReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MRLAB_H */
