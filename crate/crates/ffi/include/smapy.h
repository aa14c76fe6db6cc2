#ifndef SMAPY_H
#define SMAPY_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every call.
 */
typedef enum SmapyStatus {
  SMAPY_STATUS_OK = 0,
  SMAPY_STATUS_NULL_POINTER = 1,
  SMAPY_STATUS_INVALID_UTF8 = 2,
  /**
   * Invalid parameters or learner settings.
   */
  SMAPY_STATUS_CONFIG = 3,
  /**
   * Bad input values, dimension mismatch or unusable model contents.
   */
  SMAPY_STATUS_DATA = 4,
  SMAPY_STATUS_IO = 5,
  /**
   * Prediction requested from a model without agents.
   */
  SMAPY_STATUS_NO_AGENTS = 6,
  /**
   * The operation does not apply to this kind of model.
   */
  SMAPY_STATUS_UNSUPPORTED = 7,
  SMAPY_STATUS_PANIC = 8,
} SmapyStatus;

typedef enum SmapyLearnerKind {
  SMAPY_LEARNER_KIND_LOGISTIC = 0,
  SMAPY_LEARNER_KIND_LINEAR_SVM = 1,
  SMAPY_LEARNER_KIND_PA1 = 2,
  SMAPY_LEARNER_KIND_PA2 = 3,
} SmapyLearnerKind;

typedef enum SmapyPenalty {
  SMAPY_PENALTY_L1 = 0,
  SMAPY_PENALTY_L2 = 1,
  SMAPY_PENALTY_ELASTIC_NET = 2,
} SmapyPenalty;

/**
 * Opaque model handle.
 */
typedef struct SmapyModel SmapyModel;

/**
 * Agent system parameters. `overlap` is ignored unless `has_overlap`.
 */
typedef struct SmapyParams {
  double r;
  bool has_overlap;
  double overlap;
  bool exclusion;
  double alpha;
  double f_plus;
  double f_minus;
} SmapyParams;

/**
 * Learner settings. `alpha_reg`, `penalty` and `l1_ratio` apply to
 * logistic/linear SVM, `c` to the passive-aggressive kinds.
 */
typedef struct SmapyLearner {
  enum SmapyLearnerKind kind;
  double alpha_reg;
  enum SmapyPenalty penalty;
  double l1_ratio;
  double c;
} SmapyLearner;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Create an empty agent system for streaming use over `dim` features.
 * Feature extrema are tracked online.
 *
 * # Safety
 * `params` and `learner` must point to valid structs; `out` must be writable.
 */
enum SmapyStatus smapy_model_new(const struct SmapyParams *params,
                                 const struct SmapyLearner *learner,
                                 size_t dim,
                                 struct SmapyModel **out);

/**
 * Load a model file written by `smapy train` or [`smapy_model_save`].
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum SmapyStatus smapy_model_load(const char *path, struct SmapyModel **out);

/**
 * Write the model to `path`. Only agent systems and linear models loaded
 * from files can be saved.
 *
 * # Safety
 * `model` must be a live handle and `path` a NUL-terminated string.
 */
enum SmapyStatus smapy_model_save(const struct SmapyModel *model, const char *path);

/**
 * Release a handle. Null is ignored.
 *
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void smapy_model_free(struct SmapyModel *model);

/**
 * Number of input features.
 *
 * # Safety
 * `model` must be a live handle and `out` writable.
 */
enum SmapyStatus smapy_model_dim(const struct SmapyModel *model, size_t *out);

/**
 * Number of Context agents (0 for linear models).
 *
 * # Safety
 * `model` must be a live handle and `out` writable.
 */
enum SmapyStatus smapy_model_agent_count(const struct SmapyModel *model, size_t *out);

/**
 * One exploration (learning) cycle on a labelled observation.
 *
 * # Safety
 * `model` must be a live handle, `features` must point to `len` doubles and
 * `label` must be a NUL-terminated string.
 */
enum SmapyStatus smapy_model_explore(struct SmapyModel *model,
                                     const double *features,
                                     size_t len,
                                     const char *label);

/**
 * Classify one observation. The label is returned as a new string that the
 * caller releases with [`smapy_string_free`].
 *
 * # Safety
 * `model` must be a live handle, `features` must point to `len` doubles and
 * `out_label` must be writable.
 */
enum SmapyStatus smapy_model_predict(const struct SmapyModel *model,
                                     const double *features,
                                     size_t len,
                                     char **out_label);

/**
 * Release a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a string from this library not yet freed.
 */
void smapy_string_free(char *s);

/**
 * Message of the last failed call on this thread, or null. The pointer stays
 * valid until the next call into the library on the same thread.
 */
const char *smapy_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SMAPY_H */
