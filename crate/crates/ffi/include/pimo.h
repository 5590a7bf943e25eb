#ifndef PIMO_H
#define PIMO_H

/* Generated by cbindgen from the pimo-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Success.
 */
#define PIMO_OK 0

/**
 * Invalid argument (null pointer, bad flag value, dimension mismatch).
 */
#define PIMO_INVALID_ARGUMENT 2

/**
 * File or format error while reading or writing data.
 */
#define PIMO_INGEST_ERROR 3

/**
 * Numerical failure (e.g. an indefinite fitted covariance).
 */
#define PIMO_NUMERICAL_ERROR 4

/**
 * Input data too degenerate for the requested operation.
 */
#define PIMO_DEGENERATE_DATA 5

/**
 * A panic was caught at the language boundary.
 */
#define PIMO_PANIC 6

/**
 * A word-indexed ensemble of square matrices (opaque).
 */
typedef struct PimoEnsemble PimoEnsemble;

/**
 * A fitted Gaussian entry model (opaque).
 */
typedef struct PimoModel PimoModel;

/**
 * An ordered set of matrix observables (opaque).
 */
typedef struct PimoSet PimoSet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Returns the error message of the last failing call on this thread, or an
 * empty string if none failed yet. The pointer stays valid until the next
 * failing call on the same thread; do not free it.
 */
const char *pimo_last_error_message(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must be a pointer previously returned through one of this library's
 * string out-parameters (or null, which is a no-op). Free it at most once.
 */
void pimo_string_free(char *s);

/**
 * Loads a matrix ensemble from a directory (manifest.json + per-word CSV).
 *
 * # Safety
 * `dir` must be a NUL-terminated string; `out` must be a valid pointer.
 * On success `*out` owns the ensemble; release it with
 * `pimo_ensemble_free`.
 */
int32_t pimo_ensemble_load(const char *dir, PimoEnsemble **out);

/**
 * Writes an ensemble to a directory in the manifest + CSV layout.
 *
 * # Safety
 * `ens` must be a live handle from this library; `dir` a NUL-terminated
 * string.
 */
int32_t pimo_ensemble_save(const PimoEnsemble *ens, const char *dir);

/**
 * Releases an ensemble handle.
 *
 * # Safety
 * `ens` must be a handle from this library (or null, a no-op); release it
 * at most once.
 */
void pimo_ensemble_free(PimoEnsemble *ens);

/**
 * Matrix dimension of the ensemble; 0 when `ens` is null.
 *
 * # Safety
 * `ens` must be a live handle from this library or null.
 */
size_t pimo_ensemble_dim(const PimoEnsemble *ens);

/**
 * Number of words in the ensemble; 0 when `ens` is null.
 *
 * # Safety
 * `ens` must be a live handle from this library or null.
 */
size_t pimo_ensemble_len(const PimoEnsemble *ens);

/**
 * Builds one of the canonical observable sets ("13", "10", "15", "23",
 * "28").
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` a valid pointer. On
 * success `*out` owns the set; release it with `pimo_set_free`.
 */
int32_t pimo_set_named(const char *name, PimoSet **out);

/**
 * Builds a custom observable set from a JSON array of graphs (the same
 * format accepted by the CLI's `--set FILE`).
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` a valid pointer. On
 * success `*out` owns the set; release it with `pimo_set_free`.
 */
int32_t pimo_set_from_json(const char *json, PimoSet **out);

/**
 * Releases a set handle.
 *
 * # Safety
 * `set` must be a handle from this library (or null, a no-op); release it
 * at most once.
 */
void pimo_set_free(PimoSet *set);

/**
 * Number of observables in the set; 0 when `set` is null.
 *
 * # Safety
 * `set` must be a live handle from this library or null.
 */
size_t pimo_set_len(const PimoSet *set);

/**
 * Evaluates every observable of `set` on one `dim` x `dim` matrix given in
 * row-major order. Writes `pimo_set_len(set)` values into `out_values`.
 *
 * # Safety
 * `set` must be a live handle; `matrix` must point to `dim * dim` doubles;
 * `out_values` must have room for `pimo_set_len(set)` doubles.
 */
int32_t pimo_set_evaluate(const PimoSet *set, const double *matrix, size_t dim, double *out_values);

/**
 * Fits the Gaussian entry model on an ensemble.
 *
 * # Safety
 * `ens` must be a live handle; `out` a valid pointer. On success `*out`
 * owns the model; release it with `pimo_model_free`.
 */
int32_t pimo_model_fit(const PimoEnsemble *ens, PimoModel **out);

/**
 * Releases a model handle.
 *
 * # Safety
 * `model` must be a handle from this library (or null, a no-op); release
 * it at most once.
 */
void pimo_model_free(PimoModel *model);

/**
 * Matrix dimension the model was fitted at; 0 when `model` is null.
 *
 * # Safety
 * `model` must be a live handle from this library or null.
 */
size_t pimo_model_dim(const PimoModel *model);

/**
 * Expected value under the model of observable `index` of `set` (0-based).
 *
 * # Safety
 * `model` and `set` must be live handles; `out_value` a valid pointer.
 */
int32_t pimo_model_moment(const PimoModel *model,
                          const PimoSet *set,
                          size_t index,
                          double *out_value);

/**
 * Serializes a model to JSON.
 *
 * # Safety
 * `model` must be a live handle; `out_json` a valid pointer. On success
 * `*out_json` is a caller-owned string; release it with
 * `pimo_string_free`.
 */
int32_t pimo_model_to_json(const PimoModel *model, char **out_json);

/**
 * Restores a model from its JSON serialization.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` a valid pointer. On
 * success `*out` owns the model; release it with `pimo_model_free`.
 */
int32_t pimo_model_from_json(const char *json, PimoModel **out);

/**
 * Draws `count` matrices from the model into a new ensemble
 * (reproducible for a fixed `seed`).
 *
 * # Safety
 * `model` must be a live handle; `out` a valid pointer. On success `*out`
 * owns the ensemble; release it with `pimo_ensemble_free`.
 */
int32_t pimo_model_sample(const PimoModel *model, size_t count, uint64_t seed, PimoEnsemble **out);

/**
 * Fits the model on `ens` and compares observable means of `set` against
 * it; the full report is returned as a JSON string.
 *
 * # Safety
 * `ens` and `set` must be live handles; `out_json` a valid pointer. On
 * success `*out_json` is a caller-owned string; release it with
 * `pimo_string_free`.
 */
int32_t pimo_gaussianity_json(const PimoEnsemble *ens, const PimoSet *set, char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PIMO_H */
