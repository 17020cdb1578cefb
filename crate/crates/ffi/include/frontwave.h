#ifndef FRONTWAVE_H
#define FRONTWAVE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FwStatus {
  FW_STATUS_OK = 0,
  FW_STATUS_NULL_POINTER = 1,
  FW_STATUS_INVALID_INPUT = 2,
  FW_STATUS_CONFIG = 3,
  FW_STATUS_ASSUMPTION = 4,
  FW_STATUS_NUMERICAL = 5,
  FW_STATUS_IO = 6,
  FW_STATUS_PANIC = 7,
} FwStatus;

/**
 * Opaque model handle.
 */
typedef struct FwModel FwModel;

typedef struct FwSlopeReport {
  double measured_slope;
  double uncertainty;
  double predicted_lambda;
  double relative_gap;
  double half_horizon_gap;
  bool pass;
} FwSlopeReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Build a model from a NUL-terminated TOML config. On success `*out` owns
 * a handle that must be released with [`fw_model_free`].
 *
 * # Safety
 * `config_toml` must be a valid C string and `out` a writable pointer.
 */
enum FwStatus fw_model_new(const char *config_toml, struct FwModel **out);

/**
 * Release a model. Null is ignored.
 *
 * # Safety
 * `model` must come from [`fw_model_new`] and not be used afterwards.
 */
void fw_model_free(struct FwModel *model);

/**
 * Override the verification horizon.
 *
 * # Safety
 * `model` must be a live handle.
 */
enum FwStatus fw_model_set_horizon(struct FwModel *model, double horizon);

/**
 * Predicted slope `lambda(A)`.
 *
 * # Safety
 * `model` must be a live handle and `out` writable.
 */
enum FwStatus fw_lambda(const struct FwModel *model, double *out);

/**
 * Front lengths `|S_t|` at `n` increasing times.
 *
 * # Safety
 * `times` and `lengths` must each point to `n` doubles.
 */
enum FwStatus fw_front_lengths(const struct FwModel *model,
                               const double *times,
                               size_t n,
                               double *lengths);

/**
 * Front slope against `lambda(A)` up to the model horizon.
 *
 * # Safety
 * `model` must be a live handle and `out` writable.
 */
enum FwStatus fw_verify(const struct FwModel *model, struct FwSlopeReport *out);

/**
 * Copy the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length plus one, so a
 * caller can size the buffer with a first call using `len = 0`.
 *
 * # Safety
 * `buf` must point to `len` writable bytes (or be null with `len = 0`).
 */
size_t fw_last_error_message(char *buf, size_t len);

/**
 * Library version as a static C string.
 */
const char *fw_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FRONTWAVE_H */
