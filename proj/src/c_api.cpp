// Copyright 2026 The alearn Authors
// SPDX-License-Identifier: Apache-2.0

#include "alearn/alearn.h"

#include <cstring>
#include <memory>
#include <string>

#include "alearn/annotation_service.hpp"
#include "alearn/dataset.hpp"
#include "alearn/engine.hpp"
#include "alearn/http_server.hpp"
#include "alearn/uncertainty.hpp"

struct alearn_dataset {
  alearn::Dataset ds;
};

struct alearn_run {
  alearn::RunResult result;
};

struct alearn_server {
  std::shared_ptr<const alearn::Dataset> ds;
  std::unique_ptr<alearn::AnnotationService> service;
  std::unique_ptr<alearn::HttpServer> http;
  int port = 0;
};

namespace {

thread_local std::string last_error;

alearn_status fail(alearn_status status, const char* message) {
  last_error = message;
  return status;
}

template <typename Fn>
alearn_status guarded(Fn&& fn) {
  try {
    fn();
    return ALEARN_OK;
  } catch (const alearn::ParseError& e) {
    return fail(ALEARN_ERR_PARSE, e.what());
  } catch (const alearn::IntegrityError& e) {
    return fail(ALEARN_ERR_INTEGRITY, e.what());
  } catch (const alearn::ShapeError& e) {
    return fail(ALEARN_ERR_SHAPE, e.what());
  } catch (const alearn::TrainingError& e) {
    return fail(ALEARN_ERR_TRAINING, e.what());
  } catch (const alearn::ConfigError& e) {
    return fail(ALEARN_ERR_INVALID_ARGUMENT, e.what());
  } catch (const alearn::IoError& e) {
    return fail(ALEARN_ERR_IO, e.what());
  } catch (const alearn::OracleError& e) {
    return fail(ALEARN_ERR_ORACLE, e.what());
  } catch (const alearn::ConflictError& e) {
    return fail(ALEARN_ERR_CONFLICT, e.what());
  } catch (const alearn::NotFoundError& e) {
    return fail(ALEARN_ERR_NOT_FOUND, e.what());
  } catch (const alearn::PoolExhaustedError& e) {
    return fail(ALEARN_ERR_POOL_EXHAUSTED, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(ALEARN_ERR_IO, e.what());
  } catch (const std::exception& e) {
    return fail(ALEARN_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(ALEARN_ERR_INTERNAL, "unknown error");
  }
}

#define ALEARN_REQUIRE(cond)                                                     \
  do {                                                                           \
    if (!(cond)) return fail(ALEARN_ERR_INVALID_ARGUMENT, "null argument: " #cond); \
  } while (0)

alearn::TrainConfig to_cpp(const alearn_train_config& c) {
  alearn::TrainConfig t;
  t.l2_penalty = c.l2_penalty;
  t.learning_rate = c.learning_rate;
  t.max_epochs = c.max_epochs;
  t.convergence_tol = c.convergence_tol;
  t.rng_seed = c.rng_seed;
  return t;
}

alearn::LoopConfig to_cpp(const alearn_loop_config& c) {
  alearn::LoopConfig l;
  const std::size_t len = strnlen(c.strategy, sizeof c.strategy);
  l.strategy = alearn::parse_strategy(std::string_view(c.strategy, len));
  l.batch_size = c.batch_size;
  l.max_iterations = c.max_iterations;
  if (c.num_checkpoints > ALEARN_MAX_CHECKPOINTS) {
    throw alearn::ConfigError("too many checkpoints");
  }
  l.checkpoint_iterations.assign(c.checkpoints, c.checkpoints + c.num_checkpoints);
  l.committee_size = c.committee_size;
  l.classifier_cfg = to_cpp(c.train);
  l.retrain_every = c.retrain_every;
  l.rng_seed = c.rng_seed;
  l.log_base = c.log_base;
  return l;
}

alearn::UncertaintyKind uncertainty_kind(const char* name) {
  const std::string_view s(name);
  if (s == "lc") return alearn::UncertaintyKind::LeastConfidence;
  if (s == "ms") return alearn::UncertaintyKind::MarginSampling;
  if (s == "es") return alearn::UncertaintyKind::EntropySampling;
  throw alearn::ConfigError("unknown uncertainty strategy '" + std::string(s) + "'");
}

alearn::PosteriorMatrix wrap_posteriors(const double* data, size_t n, size_t m) {
  alearn::PosteriorMatrix p;
  p.values = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      data, static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  p.validate();
  return p;
}

}  // namespace

extern "C" {

const char* alearn_last_error(void) { return last_error.c_str(); }

const char* alearn_status_name(alearn_status status) {
  switch (status) {
    case ALEARN_OK: return "ok";
    case ALEARN_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case ALEARN_ERR_PARSE: return "parse";
    case ALEARN_ERR_INTEGRITY: return "integrity";
    case ALEARN_ERR_SHAPE: return "shape";
    case ALEARN_ERR_TRAINING: return "training";
    case ALEARN_ERR_IO: return "io";
    case ALEARN_ERR_ORACLE: return "oracle";
    case ALEARN_ERR_CONFLICT: return "conflict";
    case ALEARN_ERR_NOT_FOUND: return "not_found";
    case ALEARN_ERR_POOL_EXHAUSTED: return "pool_exhausted";
    case ALEARN_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* alearn_version(void) { return "1.0.0"; }

void alearn_synthetic_spec_init(alearn_synthetic_spec* spec) {
  if (!spec) return;
  const alearn::SyntheticSpec d;
  spec->num_classes = d.num_classes;
  spec->dimensionality = d.dimensionality;
  spec->seed_per_class = d.seed_per_class;
  spec->pool_per_class = d.pool_per_class;
  spec->irrelevant_count = d.irrelevant_count;
  spec->test_per_class = d.test_per_class;
  spec->cluster_separation = d.cluster_separation;
  spec->rng_seed = d.rng_seed;
}

alearn_status alearn_dataset_generate(const alearn_synthetic_spec* spec, alearn_dataset** out) {
  ALEARN_REQUIRE(spec && out);
  return guarded([&] {
    alearn::SyntheticSpec s;
    s.num_classes = spec->num_classes;
    s.dimensionality = spec->dimensionality;
    s.seed_per_class = spec->seed_per_class;
    s.pool_per_class = spec->pool_per_class;
    s.irrelevant_count = spec->irrelevant_count;
    s.test_per_class = spec->test_per_class;
    s.cluster_separation = spec->cluster_separation;
    s.rng_seed = spec->rng_seed;
    *out = new alearn_dataset{alearn::generate_synthetic(s)};
  });
}

alearn_status alearn_dataset_load_csv(const char* path, const char* const* class_names,
                                      size_t num_class_names, alearn_dataset** out) {
  ALEARN_REQUIRE(path && out);
  ALEARN_REQUIRE(class_names || num_class_names == 0);
  return guarded([&] {
    alearn::CsvSchema schema;
    for (size_t i = 0; i < num_class_names; ++i) schema.class_names.emplace_back(class_names[i]);
    *out = new alearn_dataset{alearn::load_csv(path, schema)};
  });
}

alearn_status alearn_dataset_write_csv(const alearn_dataset* ds, const char* path) {
  ALEARN_REQUIRE(ds && path);
  return guarded([&] { alearn::write_csv(ds->ds, std::filesystem::path(path)); });
}

alearn_status alearn_dataset_sizes(const alearn_dataset* ds, size_t* seed, size_t* pool,
                                   size_t* test) {
  ALEARN_REQUIRE(ds);
  if (seed) *seed = ds->ds.seed_set.size();
  if (pool) *pool = ds->ds.pool.size();
  if (test) *test = ds->ds.test_set.size();
  return ALEARN_OK;
}

alearn_status alearn_dataset_shape(const alearn_dataset* ds, size_t* dimensionality,
                                   size_t* num_classes) {
  ALEARN_REQUIRE(ds);
  if (dimensionality) *dimensionality = ds->ds.dimensionality;
  if (num_classes) *num_classes = ds->ds.num_classes;
  return ALEARN_OK;
}

alearn_status alearn_dataset_class_name(const alearn_dataset* ds, size_t index,
                                        const char** name) {
  ALEARN_REQUIRE(ds && name);
  if (index >= ds->ds.class_names.size()) {
    return fail(ALEARN_ERR_INVALID_ARGUMENT, "class index out of range");
  }
  *name = ds->ds.class_names[index].c_str();
  return ALEARN_OK;
}

alearn_status alearn_dataset_irrelevant_count(const alearn_dataset* ds, size_t* count) {
  ALEARN_REQUIRE(ds && count);
  *count = 0;
  for (const auto& ex : ds->ds.pool) *count += ex.relevant ? 0 : 1;
  return ALEARN_OK;
}

void alearn_dataset_free(alearn_dataset* ds) { delete ds; }

void alearn_train_config_init(alearn_train_config* cfg) {
  if (!cfg) return;
  const alearn::TrainConfig d;
  cfg->l2_penalty = d.l2_penalty;
  cfg->learning_rate = d.learning_rate;
  cfg->max_epochs = d.max_epochs;
  cfg->convergence_tol = d.convergence_tol;
  cfg->rng_seed = d.rng_seed;
}

void alearn_loop_config_init(alearn_loop_config* cfg) {
  if (!cfg) return;
  const alearn::LoopConfig d;
  std::memset(cfg, 0, sizeof *cfg);
  std::strncpy(cfg->strategy, "lc", sizeof cfg->strategy - 1);
  cfg->batch_size = d.batch_size;
  cfg->max_iterations = d.max_iterations;
  cfg->num_checkpoints = d.checkpoint_iterations.size();
  for (size_t i = 0; i < cfg->num_checkpoints; ++i) cfg->checkpoints[i] = d.checkpoint_iterations[i];
  cfg->committee_size = d.committee_size;
  alearn_train_config_init(&cfg->train);
  cfg->retrain_every = d.retrain_every;
  cfg->rng_seed = d.rng_seed;
  cfg->log_base = d.log_base;
}

alearn_status alearn_run_loop(const alearn_dataset* ds, const alearn_loop_config* cfg,
                              const char* checkpoint_path, int resume, alearn_run** out) {
  ALEARN_REQUIRE(ds && cfg && out);
  return guarded([&] {
    alearn::SimulatedOracle oracle(ds->ds);
    alearn::RunOptions options;
    if (checkpoint_path) options.checkpoint_file = checkpoint_path;
    options.resume = resume != 0;
    *out = new alearn_run{alearn::run_loop(ds->ds, to_cpp(*cfg), oracle, options)};
  });
}

size_t alearn_run_curve_size(const alearn_run* run) {
  return run ? run->result.curve.points.size() : 0;
}

alearn_status alearn_run_curve_point(const alearn_run* run, size_t index, size_t* iteration,
                                     size_t* labeled_size, double* accuracy) {
  ALEARN_REQUIRE(run);
  if (index >= run->result.curve.points.size()) {
    return fail(ALEARN_ERR_INVALID_ARGUMENT, "curve index out of range");
  }
  const auto& p = run->result.curve.points[index];
  if (iteration) *iteration = p.iteration;
  if (labeled_size) *labeled_size = p.labeled_size;
  if (accuracy) *accuracy = p.accuracy;
  return ALEARN_OK;
}

alearn_status alearn_run_write_curve(const alearn_run* run, const char* path) {
  ALEARN_REQUIRE(run && path);
  return guarded([&] { alearn::export_curve(run->result.curve, path); });
}

double alearn_run_final_accuracy(const alearn_run* run) {
  return run ? run->result.final_accuracy : 0.0;
}

alearn_status alearn_run_counts(const alearn_run* run, size_t* iteration, size_t* labeled,
                                size_t* pool, size_t* discarded) {
  ALEARN_REQUIRE(run);
  const auto& st = run->result.state;
  if (iteration) *iteration = st.iteration;
  if (labeled) *labeled = st.labeled.size();
  if (pool) *pool = st.pool.size();
  if (discarded) *discarded = st.discarded.size();
  return ALEARN_OK;
}

uint64_t alearn_run_state_hash(const alearn_run* run) {
  return run ? alearn::state_hash(run->result.state) : 0;
}

void alearn_run_free(alearn_run* run) { delete run; }

alearn_status alearn_baseline_supervised(const alearn_dataset* ds, const alearn_train_config* cfg,
                                         double* accuracy) {
  ALEARN_REQUIRE(ds && cfg && accuracy);
  return guarded([&] { *accuracy = alearn::baseline_supervised(ds->ds, to_cpp(*cfg)); });
}

alearn_status alearn_baseline_noisy_pool(const alearn_dataset* ds, const alearn_train_config* cfg,
                                         double* accuracy) {
  ALEARN_REQUIRE(ds && cfg && accuracy);
  return guarded([&] { *accuracy = alearn::baseline_noisy_pool(ds->ds, to_cpp(*cfg)); });
}

alearn_status alearn_uncertainty_scores(const double* posteriors, size_t n, size_t m,
                                        const char* strategy, double log_base, double* out) {
  ALEARN_REQUIRE(posteriors && strategy && out);
  return guarded([&] {
    alearn::UncertaintyStrategy s{uncertainty_kind(strategy), log_base};
    s.validate();
    const auto scores = alearn::uncertainty_scores(wrap_posteriors(posteriors, n, m), s);
    std::copy(scores.begin(), scores.end(), out);
  });
}

alearn_status alearn_select_uncertain(const double* posteriors, size_t n, size_t m,
                                      const char* strategy, double log_base, size_t k,
                                      size_t* out_rows) {
  ALEARN_REQUIRE(posteriors && strategy && out_rows);
  return guarded([&] {
    alearn::UncertaintyStrategy s{uncertainty_kind(strategy), log_base};
    s.validate();
    const auto rows = alearn::select_uncertain_rows(wrap_posteriors(posteriors, n, m), s, k);
    std::copy(rows.begin(), rows.end(), out_rows);
  });
}

void alearn_server_options_init(alearn_server_options* opts) {
  if (!opts) return;
  opts->host = "127.0.0.1";
  opts->port = 8080;
  opts->static_dir = nullptr;
  opts->checkpoint_path = nullptr;
  opts->resume = 0;
  opts->query_timeout_ms = 0;
}

alearn_status alearn_server_create(const alearn_dataset* ds, const alearn_loop_config* cfg,
                                   const alearn_server_options* opts, alearn_server** out) {
  ALEARN_REQUIRE(ds && cfg && opts && out && opts->host);
  return guarded([&] {
    auto server = std::make_unique<alearn_server>();
    server->ds = std::make_shared<const alearn::Dataset>(ds->ds);
    alearn::ServiceOptions so;
    if (opts->checkpoint_path) so.checkpoint_file = opts->checkpoint_path;
    so.resume = opts->resume != 0;
    if (opts->query_timeout_ms) so.query_timeout = std::chrono::milliseconds(opts->query_timeout_ms);
    server->service = std::make_unique<alearn::AnnotationService>(server->ds, to_cpp(*cfg), so);
    std::optional<std::filesystem::path> static_dir;
    if (opts->static_dir) static_dir = opts->static_dir;
    server->http = std::make_unique<alearn::HttpServer>(*server->service, static_dir);
    server->port = server->http->bind(opts->host, opts->port);
    *out = server.release();
  });
}

int alearn_server_port(const alearn_server* server) { return server ? server->port : -1; }

alearn_status alearn_server_run(alearn_server* server) {
  ALEARN_REQUIRE(server);
  return guarded([&] { server->http->run(); });
}

void alearn_server_stop(alearn_server* server) {
  if (server) server->http->stop();
}

void alearn_server_free(alearn_server* server) { delete server; }

}  // extern "C"
