#ifndef EQUIBOUND_H
#define EQUIBOUND_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes shared by every fallible entry point.
typedef enum EqbStatus {
  EQB_STATUS_OK = 0,
  EQB_STATUS_NULL_POINTER = 1,
  EQB_STATUS_INVALID_ARGUMENT = 2,
  EQB_STATUS_GROUP = 3,
  EQB_STATUS_MODEL = 4,
  EQB_STATUS_DATA = 5,
  EQB_STATUS_TRAIN = 6,
  EQB_STATUS_BOUND = 7,
  EQB_STATUS_IO = 8,
  EQB_STATUS_CHECKS_FAILED = 9,
  EQB_STATUS_PANIC = 10,
} EqbStatus;

// Which bound a report came from.
typedef enum EqbBoundKind {
  EQB_BOUND_KIND_GENERAL_POOLING = 0,
  EQB_BOUND_KIND_MAX_POOLING = 1,
  EQB_BOUND_KIND_LOCALITY = 2,
  EQB_BOUND_KIND_BAND_LIMITED_FLOOR = 3,
} EqbBoundKind;

// Labelled group signals.
typedef struct EqbDataset EqbDataset;

// A finite group.
typedef struct EqbGroup EqbGroup;

// A model shape with its parameters.
typedef struct EqbModel EqbModel;

typedef struct EqbBoundReport {
  enum EqbBoundKind kind;
  double complexity_term;
  double confidence_term;
  double total;
  // `NaN` unless the max-pooling bound was used.
  double mmax;
  // Nonzero when `mmax` came from sampling.
  uint8_t lower_estimate;
} EqbBoundReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null after a
// success. The pointer stays valid until the next call on this thread.
const char *eqb_last_error(void);

// Parses a group spec such as `c8`, `d4` or `c2xc4`.
//
// # Safety
// `spec` must be a NUL-terminated string and `out` writable.
enum EqbStatus eqb_group_new(const char *spec, struct EqbGroup **out);

// # Safety
// `g` must be null or a handle from [`eqb_group_new`] not yet freed.
void eqb_group_free(struct EqbGroup *g);

// `|G|`, or 0 for a null handle.
//
// # Safety
// `g` must be null or a live group handle.
size_t eqb_group_order(const struct EqbGroup *g);

// Writes the index of `a * b`.
//
// # Safety
// `g` must be a live group handle and `out` writable.
enum EqbStatus eqb_group_mul(const struct EqbGroup *g, size_t a, size_t b, size_t *out);

// Builds a dataset of `m` signals with `c0` channels each. `values` holds
// `m * c0 * |G|` entries, sample-major then channel-major; `labels` holds
// `m` entries in `{-1, +1}`.
//
// # Safety
// Pointers must reference the stated number of elements; `out` writable.
enum EqbStatus eqb_dataset_new(const struct EqbGroup *g,
                               size_t c0,
                               size_t m,
                               const double *values,
                               const double *labels,
                               struct EqbDataset **out);

// # Safety
// `d` must be null or a live dataset handle.
void eqb_dataset_free(struct EqbDataset *d);

// `b_x = max_i |x_i|`, or `NaN` for a null handle.
//
// # Safety
// `d` must be null or a live dataset handle.
double eqb_dataset_b_x(const struct EqbDataset *d);

// New spatial group-convolution model with random parameters. `pooling`
// is `avg`, `max` or `general:<rho>:<phi>`.
//
// # Safety
// `g` must be a live group handle, `pooling` NUL-terminated, `out` writable.
enum EqbStatus eqb_model_new(const struct EqbGroup *g,
                             const char *pooling,
                             size_t c0,
                             size_t c1,
                             uint64_t seed,
                             struct EqbModel **out);

// Reads a model file.
//
// # Safety
// `path` must be NUL-terminated and `out` writable.
enum EqbStatus eqb_model_load(const char *path, struct EqbModel **out);

// Writes a model file.
//
// # Safety
// `model` must be a live handle and `path` NUL-terminated.
enum EqbStatus eqb_model_save(const struct EqbModel *model, const char *path);

// # Safety
// `model` must be null or a live model handle.
void eqb_model_free(struct EqbModel *model);

// Network output on one signal of `len = c0 * |G|` values.
//
// # Safety
// `x` must reference `len` values and `out` be writable.
enum EqbStatus eqb_model_forward(const struct EqbModel *model,
                                 const double *x,
                                 size_t len,
                                 double *out);

// `(M1, M2)` of the current parameters.
//
// # Safety
// `model` must be a live handle; `m1`, `m2` writable.
enum EqbStatus eqb_model_norms(const struct EqbModel *model, double *m1, double *m2);

// Trains in place with Adam on the hinge loss (`loss = 0`) or the logistic
// loss (`loss = 1`), full batch, and writes the final empirical loss.
//
// # Safety
// Handles must be live; `final_loss` may be null.
enum EqbStatus eqb_model_train(struct EqbModel *model,
                               const struct EqbDataset *data,
                               size_t steps,
                               double step_size,
                               uint32_t loss,
                               uint64_t seed,
                               double *final_loss);

// General-pooling bound from raw inputs.
//
// # Safety
// `out` must be writable.
enum EqbStatus eqb_bound_general(double m1,
                                 double m2,
                                 double b_x,
                                 size_t m,
                                 double delta,
                                 size_t group_order,
                                 struct EqbBoundReport *out);

// The bound matching the model's pooling, measured on `data`.
//
// # Safety
// Handles must be live and `out` writable.
enum EqbStatus eqb_bound_for_model(const struct EqbModel *model,
                                   const struct EqbDataset *data,
                                   double delta,
                                   size_t max_samples,
                                   uint64_t seed,
                                   struct EqbBoundReport *out);

// Runs a self-check scope (`group`, `spectral`, `models`, `training`,
// `bounds`, `rademacher` or `all`) and writes the number of failed checks.
// Returns [`EqbStatus::ChecksFailed`] when any failed.
//
// # Safety
// `scope` must be NUL-terminated; `failed` may be null.
enum EqbStatus eqb_verify(const char *scope, uint64_t seed, size_t *failed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EQUIBOUND_H */
