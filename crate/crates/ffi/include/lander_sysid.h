#ifndef LANDER_SYSID_H
#define LANDER_SYSID_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum LsStatus {
  LS_STATUS_OK = 0,
  LS_STATUS_NULL_POINTER = 1,
  LS_STATUS_INVALID_CONFIG = 2,
  LS_STATUS_INVALID_INPUT = 3,
  LS_STATUS_NON_FINITE = 4,
  LS_STATUS_DEPLETED = 5,
  LS_STATUS_WIDTH_MISMATCH = 6,
  LS_STATUS_NOT_CONVERGED = 7,
  LS_STATUS_DIVERGED = 8,
  LS_STATUS_IO = 9,
  LS_STATUS_PARSE = 10,
  LS_STATUS_BUFFER_TOO_SMALL = 11,
  LS_STATUS_PANIC = 12,
} LsStatus;

/**
 * Column selector for [`ls_trajectory_column`], in the order of the CSV
 * schema.
 */
typedef enum LsColumn {
  LS_COLUMN_TIME = 0,
  LS_COLUMN_COMMAND1 = 1,
  LS_COLUMN_COMMAND2 = 2,
  LS_COLUMN_COMMAND3 = 3,
  LS_COLUMN_COMMAND4 = 4,
  LS_COLUMN_STATUS1 = 5,
  LS_COLUMN_STATUS2 = 6,
  LS_COLUMN_STATUS3 = 7,
  LS_COLUMN_STATUS4 = 8,
  LS_COLUMN_THRUST1 = 9,
  LS_COLUMN_THRUST2 = 10,
  LS_COLUMN_THRUST3 = 11,
  LS_COLUMN_THRUST4 = 12,
  LS_COLUMN_PRESSURE = 13,
  LS_COLUMN_FUEL_EJECTED = 14,
  LS_COLUMN_OX_EJECTED = 15,
} LsColumn;

/**
 * Opaque fitted model.
 */
typedef struct LsModel LsModel;

/**
 * Opaque plant or model trajectory.
 */
typedef struct LsTrajectory LsTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null after a
 * successful one. Valid until the next call on the same thread.
 */
const char *ls_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ls_version(void);

/**
 * Simulates the plant for `steps` commands, yielding `steps + 1` samples.
 *
 * `config_json` is a JSON plant configuration or null for the defaults;
 * missing fields take defaults.
 *
 * # Safety
 * `commands` and `status` must point to `steps * 4` doubles, `config_json`
 * must be null or NUL-terminated, and `out` must be writable.
 */
enum LsStatus ls_simulate(const char *config_json,
                          const double *commands,
                          const double *status,
                          size_t steps,
                          struct LsTrajectory **out);

/**
 * Reads a trajectory CSV with the plant schema.
 *
 * # Safety
 * `path` must be NUL-terminated and `out` writable.
 */
enum LsStatus ls_trajectory_load(const char *path, struct LsTrajectory **out);

/**
 * Number of samples, or 0 for a null handle.
 *
 * # Safety
 * `traj` must be null or a live handle.
 */
size_t ls_trajectory_len(const struct LsTrajectory *traj);

/**
 * Copies one column into `buf`, which must hold at least the trajectory
 * length.
 *
 * # Safety
 * `traj` must be a live handle and `buf` must point to `buf_len` doubles.
 */
enum LsStatus ls_trajectory_column(const struct LsTrajectory *traj,
                                   enum LsColumn column,
                                   double *buf,
                                   size_t buf_len);

/**
 * Writes a trajectory CSV with the plant schema.
 *
 * # Safety
 * `traj` must be a live handle and `path` NUL-terminated.
 */
enum LsStatus ls_trajectory_save(const struct LsTrajectory *traj, const char *path);

/**
 * # Safety
 * `traj` must be null or a handle not yet freed.
 */
void ls_trajectory_free(struct LsTrajectory *traj);

/**
 * Loads a model saved by the `train` stage.
 *
 * # Safety
 * `path` must be NUL-terminated and `out` writable.
 */
enum LsStatus ls_model_load(const char *path, struct LsModel **out);

/**
 * History length n, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t ls_model_history(const struct LsModel *model);

/**
 * Width of the raw feature vector taken by [`ls_model_predict`].
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t ls_model_input_width(const struct LsModel *model);

/**
 * Number of outputs written by [`ls_model_predict`].
 */
size_t ls_model_output_count(void);

/**
 * Fraction of zero coefficients, or NaN for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
double ls_model_sparsity(const struct LsModel *model);

/**
 * One-step prediction from a raw feature vector: four thrusts, tank
 * pressure, ejected fuel and oxidizer mass.
 *
 * # Safety
 * `x` must point to `width` doubles and `out` to `out_len` doubles.
 */
enum LsStatus ls_model_predict(const struct LsModel *model,
                               const double *x,
                               size_t width,
                               double *out,
                               size_t out_len);

/**
 * Free-running prediction over `steps` commands. The first `n` samples of
 * the result are copied from `warmup`, which must hold at least that many.
 *
 * # Safety
 * Handles must be live, `commands` and `status` must point to `steps * 4`
 * doubles and `out` must be writable.
 */
enum LsStatus ls_rollout(const struct LsModel *model,
                         const struct LsTrajectory *warmup,
                         const double *commands,
                         const double *status,
                         size_t steps,
                         struct LsTrajectory **out);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void ls_model_free(struct LsModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LANDER_SYSID_H */
