#ifndef GLOCALX_H
#define GLOCALX_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GlxStatus {
  GLX_STATUS_OK = 0,
  GLX_STATUS_ERROR = 1,
  GLX_STATUS_INVALID_INPUT = 2,
  GLX_STATUS_ORACLE = 3,
  GLX_STATUS_NULL_POINTER = 4,
  GLX_STATUS_PANIC = 5,
} GlxStatus;

typedef struct GlxClassifier GlxClassifier;

typedef struct GlxDataset GlxDataset;

typedef struct GlxSchema GlxSchema;

typedef struct GlxTheory GlxTheory;

/**
 * Merge settings. `alpha == 0`, a negative or NaN `alpha_q` and
 * `max_iterations == 0` mean "unset".
 */
typedef struct GlxRunConfig {
  size_t batch_size;
  size_t alpha;
  double alpha_q;
  uint64_t seed;
  size_t max_iterations;
} GlxRunConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * Valid until the next call into this library on the same thread.
 */
const char *glx_last_error(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library, released once.
 */
void glx_string_free(char *s);

/**
 * # Safety
 * `json` must be a nul-terminated string and `out` writable.
 */
enum GlxStatus glx_schema_from_json(const char *json, struct GlxSchema **out);

/**
 * # Safety
 * `schema` must be null or a live handle, released once.
 */
void glx_schema_free(struct GlxSchema *schema);

/**
 * Number of features, 0 for a null handle.
 *
 * # Safety
 * `schema` must be null or a live handle.
 */
size_t glx_schema_len(const struct GlxSchema *schema);

/**
 * Loads a labelled CSV file (feature columns in schema order, then `bb_label`
 * and optionally `true_label`).
 *
 * # Safety
 * Pointers must be valid; `path` nul-terminated.
 */
enum GlxStatus glx_dataset_load_csv(const struct GlxSchema *schema,
                                    const char *path,
                                    struct GlxDataset **out);

/**
 * # Safety
 * `data` must be null or a live handle.
 */
size_t glx_dataset_len(const struct GlxDataset *data);

/**
 * # Safety
 * `data` must be null or a live handle, released once.
 */
void glx_dataset_free(struct GlxDataset *data);

/**
 * Parses a JSON rule file.
 *
 * # Safety
 * Pointers must be valid; `json` nul-terminated.
 */
enum GlxStatus glx_theory_from_json(const struct GlxSchema *schema,
                                    const char *json,
                                    struct GlxTheory **out);

/**
 * Serializes the rules in rule-file format. Free the result with
 * [`glx_string_free`].
 *
 * # Safety
 * Pointers must be valid.
 */
enum GlxStatus glx_theory_to_json(const struct GlxTheory *theory, char **out);

/**
 * # Safety
 * `theory` must be null or a live handle.
 */
size_t glx_theory_len(const struct GlxTheory *theory);

/**
 * # Safety
 * `theory` must be null or a live handle, released once.
 */
void glx_theory_free(struct GlxTheory *theory);

/**
 * Defaults: batch size 128, no filter, seed 0, no iteration cap.
 */
struct GlxRunConfig glx_run_config_default(void);

/**
 * Merges every rule of `local_rules` (each as its own starting theory) using
 * `data`. A null `config` uses [`glx_run_config_default`]. When
 * `out_dendrogram` is non-null it receives the merge history as JSON.
 *
 * # Safety
 * Pointers must be valid or null where allowed.
 */
enum GlxStatus glx_run(const struct GlxTheory *local_rules,
                       const struct GlxDataset *data,
                       const struct GlxRunConfig *config,
                       struct GlxTheory **out_theory,
                       char **out_dendrogram);

/**
 * Scores the rules on `reference`, whose majority label also becomes the
 * default for uncovered rows.
 *
 * # Safety
 * Pointers must be valid.
 */
enum GlxStatus glx_classifier_build(const struct GlxTheory *theory,
                                    const struct GlxDataset *reference,
                                    struct GlxClassifier **out);

/**
 * Predicts the label index (0 or 1) of one row of `len` values in schema
 * order; categorical values are category indices.
 *
 * # Safety
 * `row` must point to `len` doubles; other pointers valid.
 */
enum GlxStatus glx_classifier_predict(const struct GlxClassifier *clf,
                                      const double *row,
                                      size_t len,
                                      uint8_t *out_label);

/**
 * Share of `data` rows whose prediction matches the stored black-box label.
 *
 * # Safety
 * Pointers must be valid.
 */
enum GlxStatus glx_classifier_fidelity(const struct GlxClassifier *clf,
                                       const struct GlxDataset *data,
                                       double *out);

/**
 * # Safety
 * `clf` must be null or a live handle, released once.
 */
void glx_classifier_free(struct GlxClassifier *clf);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GLOCALX_H */
