/* Copyright 2026 The alearn Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to the alearn pool-based active learning engine.
 *
 * Every function returns an alearn_status. On failure, alearn_last_error()
 * returns a message describing the most recent error on the calling thread.
 * Objects are opaque handles released with the matching *_free function;
 * passing NULL to a *_free function is a no-op.
 */
#ifndef ALEARN_ALEARN_H
#define ALEARN_ALEARN_H

#include <stddef.h>
#include <stdint.h>

#if defined(ALEARN_BUILDING_LIBRARY)
#define ALEARN_API __attribute__((visibility("default")))
#else
#define ALEARN_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum alearn_status {
  ALEARN_OK = 0,
  ALEARN_ERR_INVALID_ARGUMENT = 1,
  ALEARN_ERR_PARSE = 2,
  ALEARN_ERR_INTEGRITY = 3,
  ALEARN_ERR_SHAPE = 4,
  ALEARN_ERR_TRAINING = 5,
  ALEARN_ERR_IO = 6,
  ALEARN_ERR_ORACLE = 7,
  ALEARN_ERR_CONFLICT = 8,
  ALEARN_ERR_NOT_FOUND = 9,
  ALEARN_ERR_POOL_EXHAUSTED = 10,
  ALEARN_ERR_INTERNAL = 99
} alearn_status;

typedef struct alearn_dataset alearn_dataset;
typedef struct alearn_run alearn_run;
typedef struct alearn_server alearn_server;

/* Message of the last failed call on this thread; never NULL. */
ALEARN_API const char* alearn_last_error(void);
ALEARN_API const char* alearn_status_name(alearn_status status);
ALEARN_API const char* alearn_version(void);

/* ---- dataset ----------------------------------------------------------- */

typedef struct alearn_synthetic_spec {
  size_t num_classes;
  size_t dimensionality;
  size_t seed_per_class;
  size_t pool_per_class;
  size_t irrelevant_count;
  size_t test_per_class;
  double cluster_separation;
  uint64_t rng_seed;
} alearn_synthetic_spec;

ALEARN_API void alearn_synthetic_spec_init(alearn_synthetic_spec* spec);
ALEARN_API alearn_status alearn_dataset_generate(const alearn_synthetic_spec* spec,
                                                 alearn_dataset** out);
/* class_names may be NULL (class order is then the sorted set of names). */
ALEARN_API alearn_status alearn_dataset_load_csv(const char* path, const char* const* class_names,
                                                 size_t num_class_names, alearn_dataset** out);
ALEARN_API alearn_status alearn_dataset_write_csv(const alearn_dataset* ds, const char* path);
ALEARN_API alearn_status alearn_dataset_sizes(const alearn_dataset* ds, size_t* seed,
                                              size_t* pool, size_t* test);
ALEARN_API alearn_status alearn_dataset_shape(const alearn_dataset* ds, size_t* dimensionality,
                                              size_t* num_classes);
/* Borrowed pointer valid for the lifetime of ds. */
ALEARN_API alearn_status alearn_dataset_class_name(const alearn_dataset* ds, size_t index,
                                                   const char** name);
ALEARN_API alearn_status alearn_dataset_irrelevant_count(const alearn_dataset* ds, size_t* count);
ALEARN_API void alearn_dataset_free(alearn_dataset* ds);

/* ---- configuration ----------------------------------------------------- */

typedef struct alearn_train_config {
  double l2_penalty;
  double learning_rate;
  size_t max_epochs;
  double convergence_tol;
  uint64_t rng_seed;
} alearn_train_config;

#define ALEARN_MAX_CHECKPOINTS 64

typedef struct alearn_loop_config {
  /* lc, ms, es, ve, ce, md or random. */
  char strategy[16];
  size_t batch_size;
  size_t max_iterations;
  size_t checkpoints[ALEARN_MAX_CHECKPOINTS];
  size_t num_checkpoints;
  size_t committee_size;
  alearn_train_config train;
  size_t retrain_every;
  uint64_t rng_seed;
  double log_base;
} alearn_loop_config;

ALEARN_API void alearn_train_config_init(alearn_train_config* cfg);
ALEARN_API void alearn_loop_config_init(alearn_loop_config* cfg);

/* ---- simulated runs ---------------------------------------------------- */

/* checkpoint_path may be NULL. With resume != 0 an existing checkpoint file
 * is continued instead of starting over. */
ALEARN_API alearn_status alearn_run_loop(const alearn_dataset* ds, const alearn_loop_config* cfg,
                                         const char* checkpoint_path, int resume,
                                         alearn_run** out);
ALEARN_API size_t alearn_run_curve_size(const alearn_run* run);
ALEARN_API alearn_status alearn_run_curve_point(const alearn_run* run, size_t index,
                                                size_t* iteration, size_t* labeled_size,
                                                double* accuracy);
ALEARN_API alearn_status alearn_run_write_curve(const alearn_run* run, const char* path);
ALEARN_API double alearn_run_final_accuracy(const alearn_run* run);
ALEARN_API alearn_status alearn_run_counts(const alearn_run* run, size_t* iteration,
                                           size_t* labeled, size_t* pool, size_t* discarded);
ALEARN_API uint64_t alearn_run_state_hash(const alearn_run* run);
ALEARN_API void alearn_run_free(alearn_run* run);

ALEARN_API alearn_status alearn_baseline_supervised(const alearn_dataset* ds,
                                                    const alearn_train_config* cfg,
                                                    double* accuracy);
ALEARN_API alearn_status alearn_baseline_noisy_pool(const alearn_dataset* ds,
                                                    const alearn_train_config* cfg,
                                                    double* accuracy);

/* ---- query scores ------------------------------------------------------ */

/* Scores for an n x m row-major posterior matrix. strategy is lc, ms or es;
 * `out` receives n values. */
ALEARN_API alearn_status alearn_uncertainty_scores(const double* posteriors, size_t n, size_t m,
                                                   const char* strategy, double log_base,
                                                   double* out);
/* Rows of the k most uncertain instances in selection order. */
ALEARN_API alearn_status alearn_select_uncertain(const double* posteriors, size_t n, size_t m,
                                                 const char* strategy, double log_base, size_t k,
                                                 size_t* out_rows);

/* ---- annotation service ------------------------------------------------ */

typedef struct alearn_server_options {
  const char* host;
  int port;
  /* Directory served at "/"; may be NULL. */
  const char* static_dir;
  /* Rewritten after every submission; may be NULL. */
  const char* checkpoint_path;
  int resume;
  /* 0 disables expiry. */
  uint64_t query_timeout_ms;
} alearn_server_options;

ALEARN_API void alearn_server_options_init(alearn_server_options* opts);
/* Takes a copy of the dataset; binds the socket. */
ALEARN_API alearn_status alearn_server_create(const alearn_dataset* ds,
                                              const alearn_loop_config* cfg,
                                              const alearn_server_options* opts,
                                              alearn_server** out);
ALEARN_API int alearn_server_port(const alearn_server* server);
/* Blocks until alearn_server_stop is called from another thread. */
ALEARN_API alearn_status alearn_server_run(alearn_server* server);
ALEARN_API void alearn_server_stop(alearn_server* server);
ALEARN_API void alearn_server_free(alearn_server* server);

#ifdef __cplusplus
}
#endif

#endif /* ALEARN_ALEARN_H */
