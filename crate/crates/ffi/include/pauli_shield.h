#ifndef PAULI_SHIELD_H
#define PAULI_SHIELD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes shared by every entry point.
 */
typedef enum PsStatus {
  PS_STATUS_OK = 0,
  PS_STATUS_NULL_POINTER = 1,
  PS_STATUS_INVALID_INPUT = 2,
  PS_STATUS_CONFIG = 3,
  PS_STATUS_NUMERICAL = 4,
  PS_STATUS_GRID_TOO_SMALL = 5,
  PS_STATUS_IO = 6,
  PS_STATUS_PANIC = 7,
} PsStatus;

/**
 * Control task selector for [`ps_scenario_new`].
 */
typedef enum PsTask {
  PS_TASK_EXPANSION = 0,
  PS_TASK_TRANSPORT = 1,
  PS_TASK_SPLITTING = 2,
} PsTask;

typedef enum PsShape {
  PS_SHAPE_LINEAR = 0,
  PS_SHAPE_SINUSOIDAL = 1,
} PsShape;

/**
 * One task on its default lattice; eigenbases are cached between calls.
 */
typedef struct PsScenario PsScenario;

/**
 * A parsed sweep configuration.
 */
typedef struct PsSweep PsSweep;

/**
 * Rows produced by [`ps_sweep_run`].
 */
typedef struct PsSweepResult PsSweepResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next call into this library from the same thread.
 */
const char *ps_last_error(void);

/**
 * Frees a string returned by this library.
 *
 * # Safety
 * `s` must be NULL or a pointer obtained from this library and not yet freed.
 */
void ps_string_free(char *s);

/**
 * Fidelity of a row-major `n x n_p` overlap matrix via the Gram determinant.
 *
 * # Safety
 * `re` and `im` must each point to `n * n_p` doubles; `out` must be writable.
 */
enum PsStatus ps_fidelity_fast(const double *re,
                               const double *im,
                               size_t n,
                               size_t n_p,
                               double *out);

/**
 * Fidelity by explicit enumeration of subsets and permutations (small sizes only).
 *
 * # Safety
 * As for [`ps_fidelity_fast`].
 */
enum PsStatus ps_fidelity_oracle(const double *re,
                                 const double *im,
                                 size_t n,
                                 size_t n_p,
                                 double *out);

/**
 * Writes `E_{N+1} - E_N` for `N = 1..=n_max` of the anharmonic trap into `out`.
 *
 * # Safety
 * `out` must point to `n_max` writable doubles.
 */
enum PsStatus ps_fermi_gap(double lambda, size_t n_max, double *out);

/**
 * Parses a sweep configuration (`key = value` lines).
 *
 * # Safety
 * `text` must be a NUL-terminated UTF-8 string; `out` must be writable.
 */
enum PsStatus ps_sweep_from_config(const char *text, struct PsSweep **out);

/**
 * Runs every grid point of a sweep.
 *
 * # Safety
 * `sweep` must come from [`ps_sweep_from_config`]; `out` must be writable.
 */
enum PsStatus ps_sweep_run(const struct PsSweep *sweep, struct PsSweepResult **out);

/**
 * # Safety
 * `sweep` must be NULL or a live handle from [`ps_sweep_from_config`].
 */
void ps_sweep_free(struct PsSweep *sweep);

/**
 * Number of rows in a sweep result.
 *
 * # Safety
 * `result` must be a live handle; `out` must be writable.
 */
enum PsStatus ps_sweep_result_len(const struct PsSweepResult *result, size_t *out);

/**
 * Fidelity of row `index` (gap profiles report `delta_E` instead).
 *
 * # Safety
 * `result` must be a live handle; `out` must be writable.
 */
enum PsStatus ps_sweep_result_value(const struct PsSweepResult *result, size_t index, double *out);

/**
 * CSV rendering of a sweep result; release with [`ps_string_free`].
 *
 * # Safety
 * `result` must be a live handle; `out` must be writable.
 */
enum PsStatus ps_sweep_result_csv(const struct PsSweepResult *result, char **out);

/**
 * # Safety
 * `result` must be NULL or a live handle from [`ps_sweep_run`].
 */
void ps_sweep_result_free(struct PsSweepResult *result);

/**
 * A task with its default parameters and lattice.
 *
 * # Safety
 * `out` must be writable.
 */
enum PsStatus ps_scenario_new(enum PsTask task, enum PsShape shape, struct PsScenario **out);

/**
 * Fidelity after a process of length `total_time` with `n_p` protected and
 * `n_b` buffer particles at temperature `tau`.
 *
 * # Safety
 * `scenario` must be a live handle; `out` must be writable.
 */
enum PsStatus ps_scenario_fidelity(struct PsScenario *scenario,
                                   double total_time,
                                   size_t n_p,
                                   size_t n_b,
                                   double tau,
                                   double *out);

/**
 * # Safety
 * `scenario` must be NULL or a live handle from [`ps_scenario_new`].
 */
void ps_scenario_free(struct PsScenario *scenario);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PAULI_SHIELD_H */
