/*
 * C interface to the cosem app-usage prediction library.
 *
 * Objects are opaque handles created by cosem_* functions and released with
 * the matching *_free. Functions that can fail return a cosem_status; on
 * failure cosem_last_error() describes the problem. Handles are not
 * thread-safe for concurrent mutation, but read-only calls on distinct or
 * shared handles may run in parallel.
 */
#ifndef COSEM_H_
#define COSEM_H_

#include <stddef.h>
#include <stdint.h>

#if defined(COSEM_BUILDING_LIBRARY)
#define COSEM_API __attribute__((visibility("default")))
#else
#define COSEM_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values 1-10 double as CLI exit codes; EMPTY_TRAIN_SET exits with 3. */
typedef enum cosem_status {
  COSEM_OK = 0,
  COSEM_ERR_INVALID_ARGUMENT = 1,
  COSEM_ERR_PARSE = 2,
  COSEM_ERR_EMPTY_CORPUS = 3,
  COSEM_ERR_IO = 4,
  COSEM_ERR_DIVERGENCE = 5,
  COSEM_ERR_ALL_SKIPPED = 6,
  COSEM_ERR_VERSION_MISMATCH = 7,
  COSEM_ERR_CORRUPT = 8,
  COSEM_ERR_INDEX_OUT_OF_RANGE = 9,
  COSEM_ERR_SHAPE_MISMATCH = 10,
  COSEM_ERR_EMPTY_TRAIN_SET = 11,
  COSEM_ERR_INTERNAL = 12
} cosem_status;

typedef enum cosem_format { COSEM_FORMAT_JSONL = 0, COSEM_FORMAT_CSV = 1 } cosem_format;

typedef enum cosem_split {
  COSEM_SPLIT_TRAIN = 0,
  COSEM_SPLIT_VALIDATION = 1,
  COSEM_SPLIT_TEST = 2
} cosem_split;

typedef enum cosem_variant {
  COSEM_VARIANT_COSEM = 0,
  COSEM_VARIANT_DNN_A = 1,
  COSEM_VARIANT_DNN_S = 2
} cosem_variant;

typedef enum cosem_coupling {
  COSEM_COUPLING_SEMANTIC_ONLY = 0,
  COSEM_COUPLING_HISTORY_ONLY = 1,
  COSEM_COUPLING_JOINT = 2
} cosem_coupling;

typedef struct cosem_corpus cosem_corpus;
typedef struct cosem_checkpoint cosem_checkpoint;
typedef struct cosem_report cosem_report;

COSEM_API const char* cosem_version(void);

/* Message for the most recent failure on the calling thread. */
COSEM_API const char* cosem_last_error(void);
COSEM_API const char* cosem_status_name(cosem_status status);

/* Releases strings returned through char** out-parameters. */
COSEM_API void cosem_string_free(char* s);

/* ---- synthetic data ---------------------------------------------------- */

typedef struct cosem_synth_options {
  uint64_t seed;
  int64_t users;
  int64_t apps;
  int64_t chunks;
  int64_t events_per_user;
  cosem_coupling coupling;
  double noise;
} cosem_synth_options;

COSEM_API void cosem_synth_options_init(cosem_synth_options* options);

/* Writes a JSONL event log. */
COSEM_API cosem_status cosem_synthesize_file(const cosem_synth_options* options,
                                             const char* out_path, int64_t* events_written);

/* ---- corpus ------------------------------------------------------------ */

typedef struct cosem_prepare_options {
  int64_t min_app_count;
  int64_t min_user_records;
  /* NULL selects the built-in English list; "" disables stopword removal. */
  const char* stopwords_path;
  int64_t window_seconds;
  int64_t history_len;
  double train_ratio;
  double validation_ratio;
  double test_ratio;
} cosem_prepare_options;

COSEM_API void cosem_prepare_options_init(cosem_prepare_options* options);

/* ingest -> filters -> vocabularies -> windows -> chronological split. */
COSEM_API cosem_status cosem_corpus_prepare(const char* input_path, cosem_format format,
                                            const cosem_prepare_options* options,
                                            cosem_corpus** out, int64_t* malformed_lines);
COSEM_API cosem_status cosem_corpus_load(const char* path, cosem_corpus** out);
COSEM_API cosem_status cosem_corpus_save(const cosem_corpus* corpus, const char* path);
COSEM_API void cosem_corpus_free(cosem_corpus* corpus);

COSEM_API size_t cosem_corpus_split_size(const cosem_corpus* corpus, cosem_split split);
COSEM_API size_t cosem_corpus_app_vocab_size(const cosem_corpus* corpus);
COSEM_API size_t cosem_corpus_semantic_vocab_size(const cosem_corpus* corpus);
COSEM_API size_t cosem_corpus_user_count(const cosem_corpus* corpus);
/* counts[0..2] receive the user's train/validation/test instance counts. */
COSEM_API cosem_status cosem_corpus_user_counts(const cosem_corpus* corpus, size_t user_index,
                                                const char** user_id, size_t counts[3]);
/* Settings that produced the corpus, as JSON text owned by the handle. */
COSEM_API const char* cosem_corpus_config_json(const cosem_corpus* corpus);

/* ---- training ---------------------------------------------------------- */

typedef struct cosem_model_options {
  int64_t embed_dim;
  int64_t hidden_layers;
  int64_t hidden_width;
  cosem_variant variant;
  uint64_t seed;
} cosem_model_options;

typedef struct cosem_train_options {
  double learning_rate;
  int64_t batch_size;
  int64_t max_epochs;
  int64_t patience;
  int64_t k;
  uint64_t seed;
  double clip_norm;
} cosem_train_options;

COSEM_API void cosem_model_options_init(cosem_model_options* options);
COSEM_API void cosem_train_options_init(cosem_train_options* options);

typedef void (*cosem_epoch_fn)(void* user_data, int64_t epoch, double train_loss, double val_mrr);

COSEM_API cosem_status cosem_train(const cosem_corpus* corpus, const cosem_model_options* model,
                                   const cosem_train_options* train, cosem_epoch_fn on_epoch,
                                   void* user_data, cosem_checkpoint** out);

COSEM_API cosem_status cosem_checkpoint_save(const cosem_checkpoint* checkpoint, const char* path);
COSEM_API cosem_status cosem_checkpoint_load(const char* path, cosem_checkpoint** out);
COSEM_API void cosem_checkpoint_free(cosem_checkpoint* checkpoint);

COSEM_API cosem_variant cosem_checkpoint_variant(const cosem_checkpoint* checkpoint);
COSEM_API int64_t cosem_checkpoint_best_epoch(const cosem_checkpoint* checkpoint);
COSEM_API size_t cosem_checkpoint_epoch_count(const cosem_checkpoint* checkpoint);
COSEM_API cosem_status cosem_checkpoint_epoch(const cosem_checkpoint* checkpoint, size_t index,
                                              int64_t* epoch, double* train_loss,
                                              double* val_mrr);

/* Parameters in storage order: "MS", "MA", "dnn_s.<l>.weight",
 * "dnn_s.<l>.bias", "dnn_a.<l>.weight", "dnn_a.<l>.bias", "out.weight",
 * "out.bias". `values` is row-major and owned by the handle. */
COSEM_API size_t cosem_checkpoint_param_count(const cosem_checkpoint* checkpoint);
COSEM_API cosem_status cosem_checkpoint_param(const cosem_checkpoint* checkpoint, size_t index,
                                              const char** name, const double** values,
                                              size_t* rows, size_t* cols);

/* ---- evaluation -------------------------------------------------------- */

COSEM_API cosem_status cosem_evaluate_checkpoint(const cosem_checkpoint* checkpoint,
                                                 const cosem_corpus* corpus, cosem_split split,
                                                 int64_t k, cosem_report** out);

/* baseline: "mru" or "random" (seeded uniform ranking). */
COSEM_API cosem_status cosem_evaluate_baseline(const cosem_corpus* corpus, const char* baseline,
                                               uint64_t seed, cosem_split split, int64_t k,
                                               cosem_report** out);
COSEM_API void cosem_report_free(cosem_report* report);

COSEM_API double cosem_report_mrr(const cosem_report* report);
COSEM_API double cosem_report_hit_rate(const cosem_report* report);
COSEM_API int64_t cosem_report_k(const cosem_report* report);
COSEM_API size_t cosem_report_instance_count(const cosem_report* report);
COSEM_API size_t cosem_report_skipped(const cosem_report* report);
COSEM_API const char* cosem_report_name(const cosem_report* report);
COSEM_API cosem_status cosem_report_set_name(cosem_report* report, const char* name);

/* Renders a JSON document and a text comparison table for several reports.
 * `config_json` (may be NULL) is embedded verbatim as the "config" member and
 * must be valid JSON. Either output pointer may be NULL. */
COSEM_API cosem_status cosem_reports_render(const cosem_report* const* reports, size_t count,
                                            const char* split_name, const char* config_json,
                                            char** json_out, char** table_out);

#ifdef __cplusplus
}
#endif

#endif /* COSEM_H_ */
