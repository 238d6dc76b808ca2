/*
 * C interface to the COBRAS active constraint-based clustering engine.
 *
 * All objects are opaque handles created by a *_create / *_load function and
 * released with the matching *_free. Every fallible call returns a
 * cobras_status; on failure cobras_last_error() describes the problem for
 * the calling thread. Strings returned through char** out-parameters are
 * owned by the caller and released with cobras_string_free().
 *
 * A session is a suspendable clustering run: call cobras_session_advance()
 * to obtain the next pairwise query, then cobras_session_answer() with the
 * user's decision. Sessions are independent and may be driven from any
 * thread, one thread at a time.
 */
#ifndef COBRAS_COBRAS_H
#define COBRAS_COBRAS_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(COBRAS_BUILDING_LIBRARY)
#    define COBRAS_API __declspec(dllexport)
#  else
#    define COBRAS_API __declspec(dllimport)
#  endif
#else
#  define COBRAS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cobras_status {
  COBRAS_OK = 0,
  COBRAS_ERR_INVALID_ARGUMENT = 1,
  COBRAS_ERR_IO = 2,
  COBRAS_ERR_PARSE = 3,
  COBRAS_ERR_STATE = 4,
  COBRAS_ERR_ORACLE = 5,
  COBRAS_ERR_INTERNAL = 6
} cobras_status;

typedef enum cobras_answer {
  COBRAS_MUST_LINK = 0,
  COBRAS_CANNOT_LINK = 1,
  COBRAS_DONT_KNOW = 2
} cobras_answer;

typedef enum cobras_phase {
  COBRAS_PHASE_SPLIT_LEVEL = 0,
  COBRAS_PHASE_MERGE = 1
} cobras_phase;

typedef enum cobras_end_reason {
  COBRAS_END_BUDGET = 0,
  COBRAS_END_STOPPED = 1,
  COBRAS_END_SATURATED = 2
} cobras_end_reason;

typedef enum cobras_step_kind {
  COBRAS_STEP_QUERY = 0,
  COBRAS_STEP_DONE = 1
} cobras_step_kind;

typedef struct cobras_step {
  cobras_step_kind kind;
  /* valid when kind == COBRAS_STEP_QUERY */
  size_t qnum;
  size_t i;
  size_t j;
  cobras_phase phase;
  /* valid when kind == COBRAS_STEP_DONE */
  cobras_end_reason reason;
} cobras_step;

typedef struct cobras_dataset cobras_dataset;
typedef struct cobras_session cobras_session;
typedef struct cobras_benchmark cobras_benchmark;

COBRAS_API const char* cobras_version(void);
COBRAS_API const char* cobras_status_string(cobras_status status);
/* Message of the last failure on this thread; never NULL. */
COBRAS_API const char* cobras_last_error(void);
COBRAS_API void cobras_string_free(char* s);

/* ---- datasets ---------------------------------------------------------- */

/* label_column may be NULL: a column named "class" is then used if present. */
COBRAS_API cobras_status cobras_dataset_load_csv(const char* path, const char* label_column,
                                                 cobras_dataset** out);
/* values is n*d row-major; labels may be NULL. */
COBRAS_API cobras_status cobras_dataset_create(const double* values, size_t n, size_t d,
                                               const int* labels, cobras_dataset** out);
COBRAS_API cobras_status cobras_dataset_deduplicate(const cobras_dataset* ds,
                                                    cobras_dataset** out);
COBRAS_API cobras_status cobras_dataset_normalize(const cobras_dataset* ds,
                                                  cobras_dataset** out);
COBRAS_API void cobras_dataset_free(cobras_dataset* ds);

COBRAS_API size_t cobras_dataset_size(const cobras_dataset* ds);
COBRAS_API size_t cobras_dataset_dim(const cobras_dataset* ds);
COBRAS_API int cobras_dataset_has_labels(const cobras_dataset* ds);
/* Copies row i (dim values) into out. */
COBRAS_API cobras_status cobras_dataset_row(const cobras_dataset* ds, size_t i, double* out,
                                            size_t out_len);
/* Copies n labels into out. */
COBRAS_API cobras_status cobras_dataset_labels(const cobras_dataset* ds, int* out,
                                               size_t out_len);
/* 2-D principal component projection, n*2 values. */
COBRAS_API cobras_status cobras_dataset_projection(const cobras_dataset* ds, double* out,
                                                   size_t out_len);
/* Stratified folds: out receives repetitions*n fold ids. */
COBRAS_API cobras_status cobras_dataset_make_folds(const cobras_dataset* ds, int repetitions,
                                                   int folds, uint64_t seed, int* out,
                                                   size_t out_len);

/* ---- scoring ----------------------------------------------------------- */

COBRAS_API cobras_status cobras_ari(const int* a, const int* b, size_t m, double* out);
/* scores is algorithms*tasks row-major; out receives one rank per algorithm. */
COBRAS_API cobras_status cobras_aligned_ranks(const double* scores, size_t algorithms,
                                              size_t tasks, double* out, size_t out_len);

/* ---- sessions ---------------------------------------------------------- */

typedef struct cobras_session_options {
  size_t budget;
  uint64_t seed;
  /* NULL, or one byte per instance: nonzero marks a training instance. Only
   * training instances are queried and used as medoids. */
  const unsigned char* train_mask;
  /* Recorded in traces; may be NULL. */
  const char* dataset_path;
  const char* label_column;
  const char* oracle;
} cobras_session_options;

/* The session keeps its own reference to the dataset. */
COBRAS_API cobras_status cobras_session_create(const cobras_dataset* ds,
                                               const cobras_session_options* options,
                                               cobras_session** out);
COBRAS_API void cobras_session_free(cobras_session* s);

/* Runs until the next fresh query is needed or the run ends. Idempotent while
 * a query is pending. */
COBRAS_API cobras_status cobras_session_advance(cobras_session* s, cobras_step* out);
/* qnum must match the pending query. */
COBRAS_API cobras_status cobras_session_answer(cobras_session* s, size_t qnum,
                                               cobras_answer answer);
COBRAS_API cobras_status cobras_session_stop(cobras_session* s);

COBRAS_API size_t cobras_session_answered(const cobras_session* s);
/* Number of committed clusterings so far (starts at 1). */
COBRAS_API size_t cobras_session_commit_count(const cobras_session* s);
/* Latest committed clustering; out receives n canonical cluster ids. */
COBRAS_API cobras_status cobras_session_snapshot(const cobras_session* s, int* out,
                                                 size_t out_len, size_t* query_count);
/* Answers the given pair from the dataset labels, restricted to the session's
 * training instances. Fails with COBRAS_ERR_ORACLE on a test instance. */
COBRAS_API cobras_status cobras_session_label_answer(const cobras_session* s, size_t i,
                                                     size_t j, cobras_answer* out);
/* Drives the session to the end with the label oracle. */
COBRAS_API cobras_status cobras_session_run_labels(cobras_session* s, cobras_step* out);

/* Latest committed clustering as "instance_id,cluster_id" CSV text. */
COBRAS_API cobras_status cobras_session_assignments_csv(const cobras_session* s, char** out);
COBRAS_API cobras_status cobras_session_trace(const cobras_session* s, char** out);
/* Rebuilds a session from a trace, verifying every recorded query. A trace
 * without an END event yields a session paused at its next query. */
COBRAS_API cobras_status cobras_session_replay(const cobras_dataset* ds, const char* trace_json,
                                               cobras_session** out);
/* Header fields of a trace without replaying it. Strings may be NULL. */
COBRAS_API cobras_status cobras_trace_header(const char* trace_json, char** dataset_path,
                                             char** label_column, uint64_t* seed,
                                             size_t* budget);

/* ---- benchmark --------------------------------------------------------- */

typedef struct cobras_benchmark_options {
  size_t budget;
  uint64_t seed;
  int repetitions;
  int folds;
  unsigned threads; /* 0 = hardware concurrency */
} cobras_benchmark_options;

COBRAS_API cobras_status cobras_benchmark_create(cobras_benchmark** out);
COBRAS_API void cobras_benchmark_free(cobras_benchmark* b);
/* The dataset must carry labels; the benchmark keeps its own reference. */
COBRAS_API cobras_status cobras_benchmark_add_task(cobras_benchmark* b, const char* name,
                                                   const cobras_dataset* ds);
/* "cobras" or "cobra:<N_S>" */
COBRAS_API cobras_status cobras_benchmark_add_algorithm(cobras_benchmark* b, const char* spec);
COBRAS_API cobras_status cobras_benchmark_run(cobras_benchmark* b,
                                              const cobras_benchmark_options* options);
COBRAS_API size_t cobras_benchmark_failures(const cobras_benchmark* b);
COBRAS_API size_t cobras_benchmark_cells(const cobras_benchmark* b);
/* Mean test ARI curve (budget+1 values) of one task/algorithm pair. */
COBRAS_API cobras_status cobras_benchmark_mean_curve(const cobras_benchmark* b, size_t task,
                                                     size_t algorithm, double* out,
                                                     size_t out_len);
COBRAS_API cobras_status cobras_benchmark_aligned_ranks(const cobras_benchmark* b,
                                                        size_t query_count, double* out,
                                                        size_t out_len);
COBRAS_API cobras_status cobras_benchmark_csv(const cobras_benchmark* b, char** out);
COBRAS_API cobras_status cobras_benchmark_json(const cobras_benchmark* b, char** out);

#ifdef __cplusplus
}
#endif

#endif /* COBRAS_COBRAS_H */
