/*
 * symgn - public C API.
 *
 * A shared-library surface over the core pipeline: simulate n-body/spring
 * systems, train bottlenecked graph networks on the trajectories, check that
 * learned messages are linear in the true forces, and recover symbolic force
 * laws from the message function by genetic-programming regression.
 *
 * All objects are opaque handles paired with _free functions. Calls return
 * SYMGN_OK or an error code; symgn_last_error() describes the most recent
 * failure on the calling thread.
 */
#ifndef SYMGN_H
#define SYMGN_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SYMGN_API __declspec(dllexport)
#else
#define SYMGN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum symgn_status {
  SYMGN_OK = 0,
  SYMGN_ERROR_INVALID_ARGUMENT = 1,
  SYMGN_ERROR_IO = 2,
  SYMGN_ERROR_SINGULARITY = 3,
  SYMGN_ERROR_TOPOLOGY = 4,
  SYMGN_ERROR_NUMERIC = 5,
  SYMGN_ERROR_INTERNAL = 6
} symgn_status;

/* Message for the last failing call on this thread; empty string if none. */
SYMGN_API const char* symgn_last_error(void);

typedef struct symgn_dataset symgn_dataset;
typedef struct symgn_model symgn_model;

/* ------------------------------------------------------------------ */
/* Datasets                                                           */

typedef struct symgn_sim_options {
  const char* experiment; /* r1-2d | r2-2d | r2-3d | string-2d */
  int32_t n_bodies;       /* 0 keeps the experiment default */
  int64_t n_sims;
  int64_t n_steps;
  uint64_t seed;
} symgn_sim_options;

SYMGN_API void symgn_sim_options_init(symgn_sim_options* opts);

SYMGN_API symgn_status symgn_dataset_generate(const symgn_sim_options* opts,
                                              symgn_dataset** out);
SYMGN_API symgn_status symgn_dataset_load(const char* path, symgn_dataset** out);
SYMGN_API symgn_status symgn_dataset_save(const symgn_dataset* dataset,
                                          const char* path);
SYMGN_API int64_t symgn_dataset_record_count(const symgn_dataset* dataset);
SYMGN_API int32_t symgn_dataset_dim(const symgn_dataset* dataset);
/* Zero-predictor baseline: mean |dv| per node-component. */
SYMGN_API symgn_status symgn_dataset_mean_abs_target(const symgn_dataset* dataset,
                                                     double* out);
SYMGN_API void symgn_dataset_free(symgn_dataset* dataset);

/* ------------------------------------------------------------------ */
/* Models                                                             */

typedef struct symgn_train_options {
  int32_t message_dim;
  int32_t hidden_width;
  int32_t hidden_layers;
  double learning_rate;
  double adam_beta1;
  double adam_beta2;
  double adam_epsilon;
  int64_t batch_size;
  int64_t total_steps;
  int64_t eval_interval;
  uint64_t seed;
} symgn_train_options;

SYMGN_API void symgn_train_options_init(symgn_train_options* opts);

/* Trains on the dataset with L1 loss; optionally writes the loss curve CSV. */
SYMGN_API symgn_status symgn_train(const symgn_dataset* dataset,
                                   const symgn_train_options* opts,
                                   const char* loss_csv_path_or_null,
                                   symgn_model** out);

SYMGN_API symgn_status symgn_model_load(const char* path, symgn_model** out);
SYMGN_API symgn_status symgn_model_save(const symgn_model* model, const char* path);
SYMGN_API int32_t symgn_model_dim(const symgn_model* model);
SYMGN_API int32_t symgn_model_message_dim(const symgn_model* model);
/* Mean L1 per node-component over the dataset. */
SYMGN_API symgn_status symgn_evaluate(const symgn_model* model,
                                      const symgn_dataset* dataset, double* out);
SYMGN_API void symgn_model_free(symgn_model* model);

/* ------------------------------------------------------------------ */
/* Analysis                                                           */

/* Records up to max_rows edges (fixed-stride sample) as CSV: pair features,
 * message components, true force components. */
SYMGN_API symgn_status symgn_record_messages(const symgn_model* model,
                                             const symgn_dataset* dataset,
                                             int64_t max_rows,
                                             const char* messages_csv_path);

/* OLS of each message component on the true force components plus intercept.
 * Writes one CSV row per component; out_min_r2 (optional) receives the
 * smallest R^2 across components. */
SYMGN_API symgn_status symgn_linear_fit(const char* messages_csv_path,
                                        const char* report_csv_path_or_null,
                                        double* out_min_r2);

/* Evaluates every checkpoint on freshly generated datasets at each body
 * count; per-column seeds depend only on (seed, body count) so every model in
 * a column sees identical records. */
SYMGN_API symgn_status symgn_generalize(const char* const* checkpoint_paths,
                                        int32_t n_checkpoints,
                                        const char* experiment,
                                        const int32_t* body_counts,
                                        int32_t n_counts, int64_t eval_sims,
                                        int64_t eval_steps, uint64_t seed,
                                        const char* out_csv_path);

/* ------------------------------------------------------------------ */
/* Symbolic regression                                                */

typedef struct symgn_gp_options {
  int64_t population;
  int64_t generations;
  int32_t tournament;
  double crossover_prob;
  double mutation_prob;
  int32_t max_depth;
  int32_t const_opt_iters;
  double parsimony;
  uint64_t seed;
} symgn_gp_options;

SYMGN_API void symgn_gp_options_init(symgn_gp_options* opts);

/* Fits expressions to one message component of a recorded message CSV.
 * Writes the Pareto front CSV (optional) and copies the selected expression
 * into selected_buf. out_mse / out_complexity are optional. */
SYMGN_API symgn_status symgn_symreg(const char* messages_csv_path,
                                    int32_t component,
                                    const symgn_gp_options* opts,
                                    const char* front_csv_path_or_null,
                                    char* selected_buf, size_t selected_buf_size,
                                    double* out_mse, int32_t* out_complexity);

#ifdef __cplusplus
}
#endif

#endif /* SYMGN_H */
