/* C interface to the activelo curation toolkit.
 *
 * All functions returning activelo_status never throw across the boundary.
 * On any status other than ACTIVELO_OK, activelo_last_error() describes what
 * happened (thread-local; valid until the next call on the same thread).
 * Strings returned through char** out-parameters are heap-allocated and must
 * be released with activelo_string_free().
 */
#ifndef ACTIVELO_H
#define ACTIVELO_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum activelo_status {
  ACTIVELO_OK = 0,
  ACTIVELO_PARTIAL = 1, /* finished, but some sequences failed; see outputs */
  ACTIVELO_ERROR_INVALID_ARGUMENT = 2,
  ACTIVELO_ERROR_IO = 3,
  ACTIVELO_ERROR_PARSE = 4,
  ACTIVELO_ERROR_INFEASIBLE = 5,
  ACTIVELO_ERROR_NUMERIC = 6,
  ACTIVELO_ERROR_INTERNAL = 7
} activelo_status;

/* Opaque handle over a loaded sequence pool. */
typedef struct activelo_pool activelo_pool;

const char* activelo_version(void);
const char* activelo_last_error(void);
void activelo_string_free(char* s);

/* Loads a JSON pool manifest (sequences, pose files, cloud dirs, synthetic
 * specs). The handle is immutable and safe to share across threads. */
activelo_status activelo_pool_open(const char* manifest_path, activelo_pool** out_pool);
void activelo_pool_free(activelo_pool* pool);
int activelo_pool_size(const activelo_pool* pool);
activelo_status activelo_pool_sequence_id(const activelo_pool* pool, int index,
                                          char** out_id);

/* config_json: the same JSON document every entry point takes; NULL or ""
 * means all defaults. Unknown keys are rejected. */

/* Trajectory + outlier features for every sequence. out_features_csv gets
 * the feature table; out_failures_json a JSON list of {id, message}. Returns
 * ACTIVELO_PARTIAL when some sequences failed, ACTIVELO_OK when none did.
 * Either out-parameter may be NULL if the caller does not want it. */
activelo_status activelo_analyze(const activelo_pool* pool, const char* config_json,
                                 char** out_features_csv, char** out_failures_json);

/* Constrained diverse selection over a feature table (general weather only).
 * out_json gets selected ids, objective, bins and scores. */
activelo_status activelo_itss(const char* features_csv, const char* config_json,
                              char** out_json);

/* Active admission rounds on top of an initial selection. initial_ids_json
 * is a JSON array of sequence id strings. The config must carry a seed. */
activelo_status activelo_ais(const activelo_pool* pool, const char* config_json,
                             const char* initial_ids_json, char** out_json);

/* Full pipeline (analyze, select, admit, report), writing artifacts into
 * out_dir. The config must carry manifest and seed. out_summary_json lists
 * the artifacts and the final selection. Reruns are byte-identical. */
activelo_status activelo_run(const char* config_json, const char* out_dir,
                             char** out_summary_json);

/* Epoch-cost accounting from the config's budget and report sections. */
activelo_status activelo_report(const char* config_json, char** out_json);
activelo_status activelo_report_text(const char* config_json, char** out_text);

#ifdef __cplusplus
}
#endif

#endif /* ACTIVELO_H */
