/*
 * m2oe — multimodal mixture-of-experts peptide property model.
 *
 * C API over the C++ core: opaque handles, status codes, and a thread-local
 * error message. Every function that can fail returns an m2oe_status; on
 * failure m2oe_last_error() describes what went wrong until the next failing
 * call on the same thread. Out-parameters are written only on M2OE_OK.
 */
#ifndef M2OE_H
#define M2OE_H

#include <stddef.h>
#include <stdint.h>

#ifndef M2OE_API
#define M2OE_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum m2oe_status {
  M2OE_OK = 0,
  M2OE_ERR_INVALID_ARGUMENT = 1,
  M2OE_ERR_IO = 2,
  M2OE_ERR_PARSE = 3,
  M2OE_ERR_CONFIG = 4,
  M2OE_ERR_SHAPE = 5,
  M2OE_ERR_VALIDATION = 6,
  M2OE_ERR_FORMAT = 7,
  M2OE_ERR_DEGENERATE = 8,
  M2OE_ERR_DIVERGED = 9,
  M2OE_ERR_INTERNAL = 10,
} m2oe_status;

typedef struct m2oe_config m2oe_config;
typedef struct m2oe_dataset m2oe_dataset;
typedef struct m2oe_model m2oe_model;

M2OE_API const char *m2oe_status_name(m2oe_status status);
M2OE_API const char *m2oe_last_error(void);

/* ---- configuration ----------------------------------------------------- */

/* defaults for every hyperparameter */
M2OE_API m2oe_status m2oe_config_create(m2oe_config **out);
/* plain-text file, one `key = value` per line, '#' comments, unknown keys fail */
M2OE_API m2oe_status m2oe_config_load(const char *path, m2oe_config **out);
M2OE_API m2oe_status m2oe_config_set(m2oe_config *config, const char *key,
                                     const char *value);
M2OE_API m2oe_status m2oe_config_get(const m2oe_config *config, const char *key,
                                     char *buffer, size_t buffer_len);
M2OE_API void m2oe_config_free(m2oe_config *config);

/* ---- datasets ----------------------------------------------------------- */

/* task is "classification" or "regression"; CSV header "sequence,label" */
M2OE_API m2oe_status m2oe_dataset_load_csv(const char *path, const char *task,
                                           m2oe_dataset **out);
M2OE_API m2oe_status m2oe_dataset_synth(size_t count, uint64_t seed,
                                        const char *task, m2oe_dataset **out);
/* seeded shuffle, then an 8:1:1 floor split */
M2OE_API m2oe_status m2oe_dataset_split(const m2oe_dataset *dataset,
                                        uint64_t seed, m2oe_dataset **train,
                                        m2oe_dataset **val, m2oe_dataset **test);
M2OE_API size_t m2oe_dataset_size(const m2oe_dataset *dataset);
M2OE_API void m2oe_dataset_free(m2oe_dataset *dataset);

/* ---- model -------------------------------------------------------------- */

M2OE_API m2oe_status m2oe_model_create(const m2oe_config *config,
                                       m2oe_model **out);
/* Trains per config; on success *history_json (optional) receives the
 * per-epoch records plus the final summary. Free with m2oe_string_free. */
M2OE_API m2oe_status m2oe_model_train(m2oe_model *model,
                                      const m2oe_dataset *train,
                                      const m2oe_dataset *val,
                                      char **history_json);
/* {"acc": ...} or {"mae": ..., "mse": ..., "r2": ...} */
M2OE_API m2oe_status m2oe_model_evaluate(const m2oe_model *model,
                                         const m2oe_dataset *dataset,
                                         char **metrics_json);
M2OE_API m2oe_status m2oe_model_predict(const m2oe_model *model,
                                        const char *sequence, double *out);
/* input header "sequence" or "sequence,label"; output "id,sequence,prediction" */
M2OE_API m2oe_status m2oe_model_predict_csv(const m2oe_model *model,
                                            const char *input_csv,
                                            const char *output_csv);
M2OE_API m2oe_status m2oe_model_save(const m2oe_model *model, const char *path);
M2OE_API m2oe_status m2oe_model_load(const char *path, m2oe_model **out);
M2OE_API m2oe_status m2oe_model_task(const m2oe_model *model, char *buffer,
                                     size_t buffer_len);
M2OE_API void m2oe_model_free(m2oe_model *model);

M2OE_API void m2oe_string_free(char *text);

#ifdef __cplusplus
}
#endif

#endif /* M2OE_H */
