#ifndef GUIDEWAVE_H
#define GUIDEWAVE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes shared by every entry point.
 */
typedef enum GwStatus {
  GW_STATUS_OK = 0,
  GW_STATUS_NULL_POINTER = 1,
  GW_STATUS_INVALID_UTF8 = 2,
  GW_STATUS_INVALID_INPUT = 3,
  GW_STATUS_CONFIG = 4,
  GW_STATUS_EIGENSOLVER = 5,
  GW_STATUS_CUTOFF = 6,
  GW_STATUS_TRUNCATION = 7,
  GW_STATUS_MESH = 8,
  GW_STATUS_SINGULAR = 9,
  GW_STATUS_IO = 10,
  GW_STATUS_OUT_OF_RANGE = 11,
  GW_STATUS_PANIC = 12,
} GwStatus;

/**
 * Outgoing side: plus is the right guide, minus the left guide.
 */
typedef enum GwSide {
  GW_SIDE_PLUS = 0,
  GW_SIDE_MINUS = 1,
} GwSide;

/**
 * Solution of a closed junction problem.
 */
typedef struct GwField GwField;

/**
 * Outgoing mode family of one guide.
 */
typedef struct GwModes GwModes;

/**
 * Parsed problem configuration.
 */
typedef struct GwProblem GwProblem;

/**
 * Message of the last failed call on this thread, or null after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *gw_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *gw_version(void);

/**
 * Parse a configuration file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum GwStatus gw_problem_load(const char *path, struct GwProblem **out);

/**
 * Parse a configuration from TOML text.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a writable pointer.
 */
enum GwStatus gw_problem_from_toml(const char *text, struct GwProblem **out);

/**
 * # Safety
 * `problem` must come from a `gw_problem_*` constructor or be null.
 */
void gw_problem_free(struct GwProblem *problem);

/**
 * Override the Fourier truncation `n` and the strip count `m`.
 *
 * # Safety
 * `problem` must be a live handle.
 */
enum GwStatus gw_problem_set_truncation(struct GwProblem *problem, size_t n, size_t m);

/**
 * Override the target mesh size.
 *
 * # Safety
 * `problem` must be a live handle.
 */
enum GwStatus gw_problem_set_mesh_size(struct GwProblem *problem, double h);

/**
 * Solve with the configured strip count and return the field.
 *
 * # Safety
 * `problem` must be a live handle and `out` a writable pointer.
 */
enum GwStatus gw_solve(const struct GwProblem *problem, struct GwField **out);

/**
 * Full solve writing the field, plot data and manifest under `dir`.
 *
 * # Safety
 * `problem` must be a live handle and `dir` a NUL-terminated string.
 */
enum GwStatus gw_solve_to_dir(const struct GwProblem *problem, const char *dir);

/**
 * Relative closure errors for `len` ascending strip counts against the
 * closure with `reference_m` strips; `errors` receives `len` values.
 *
 * # Safety
 * `ms` must point to `len` readable values and `errors` to `len` writable ones.
 */
enum GwStatus gw_convergence(const struct GwProblem *problem,
                             const size_t *ms,
                             size_t len,
                             size_t reference_m,
                             double *errors);

/**
 * # Safety
 * `field` must come from [`gw_solve`] or be null.
 */
void gw_field_free(struct GwField *field);

/**
 * Number of degrees of freedom of the field.
 *
 * # Safety
 * `field` must be a live handle and `out` a writable pointer.
 */
enum GwStatus gw_field_dofs(const struct GwField *field, size_t *out);

/**
 * Value of the field at `(x1, x2)`; `OutOfRange` outside the mesh.
 *
 * # Safety
 * `field` must be a live handle, `re` and `im` writable pointers.
 */
enum GwStatus gw_field_eval(const struct GwField *field,
                            double x1,
                            double x2,
                            double *re,
                            double *im);

/**
 * Relative L² distance between two fields.
 *
 * # Safety
 * Both fields must be live handles and `out` a writable pointer.
 */
enum GwStatus gw_field_error(const struct GwField *a, const struct GwField *b, double *out);

/**
 * Outgoing mode family of the guide on `side`.
 *
 * # Safety
 * `problem` must be a live handle and `out` a writable pointer.
 */
enum GwStatus gw_modes_compute(const struct GwProblem *problem,
                               enum GwSide side,
                               struct GwModes **out);

/**
 * # Safety
 * `modes` must come from [`gw_modes_compute`] or be null.
 */
void gw_modes_free(struct GwModes *modes);

/**
 * Total and propagating mode counts.
 *
 * # Safety
 * `modes` must be a live handle; `total` and `propagating` writable pointers.
 */
enum GwStatus gw_modes_count(const struct GwModes *modes, size_t *total, size_t *propagating);

/**
 * Quasimomentum per period of mode `index`.
 *
 * # Safety
 * `modes` must be a live handle; `re` and `im` writable pointers.
 */
enum GwStatus gw_modes_alpha(const struct GwModes *modes, size_t index, double *re, double *im);

#endif  /* GUIDEWAVE_H */
