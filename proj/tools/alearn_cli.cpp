// Copyright 2026 The alearn Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end: dataset generation, simulated experiment sweeps,
// baseline comparisons and the annotation server.

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "alearn/alearn.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct RuntimeFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(alearn_status status, const std::string& context) {
  if (status != ALEARN_OK) {
    throw RuntimeFailure(context + ": " + alearn_last_error() + " (" +
                         alearn_status_name(status) + ")");
  }
}

struct DatasetDeleter {
  void operator()(alearn_dataset* d) const { alearn_dataset_free(d); }
};
struct RunDeleter {
  void operator()(alearn_run* r) const { alearn_run_free(r); }
};
struct ServerDeleter {
  void operator()(alearn_server* s) const { alearn_server_free(s); }
};
using DatasetPtr = std::unique_ptr<alearn_dataset, DatasetDeleter>;
using RunPtr = std::unique_ptr<alearn_run, RunDeleter>;
using ServerPtr = std::unique_ptr<alearn_server, ServerDeleter>;

struct GlobalOptions {
  std::string out_dir = ".";
  std::uint64_t rng_seed = 0;
  bool verbose = false;
};

struct SyntheticOptions {
  std::size_t classes = 8;
  std::size_t dim = 16;
  std::size_t seed_per_class = 20;
  std::size_t pool_per_class = 200;
  std::size_t irrelevant = 0;
  std::size_t test_per_class = 50;
  double separation = 3.0;
};

struct DataSource {
  std::string csv;
  std::vector<std::string> class_names;
  SyntheticOptions synthetic;
};

struct LoopOptions {
  std::size_t batch_size = 1;
  std::size_t max_iterations = 2000;
  std::vector<std::size_t> checkpoints{1, 250, 500, 750, 1000, 1250, 1500, 2000};
  std::size_t committee_size = 3;
  std::size_t retrain_every = 1;
  std::size_t epochs = 500;
  double learning_rate = 0.1;
  double l2 = 1e-3;
  double tol = 1e-6;
  double log_base = 10.0;
};

void add_synthetic_flags(CLI::App* cmd, SyntheticOptions& s, bool required) {
  auto* classes = cmd->add_option("--classes", s.classes, "Number of classes")
                      ->check(CLI::Range(std::size_t{2}, std::size_t{100000}));
  auto* spc = cmd->add_option("--seed-per-class", s.seed_per_class, "Seed examples per class");
  if (required) {
    classes->required();
    spc->required();
  }
  cmd->add_option("--dim", s.dim, "Feature dimensionality")->check(CLI::PositiveNumber);
  cmd->add_option("--pool-per-class", s.pool_per_class, "Relevant pool items per class");
  cmd->add_option("--irrelevant", s.irrelevant, "Irrelevant pool items");
  cmd->add_option("--test-per-class", s.test_per_class, "Test examples per class");
  cmd->add_option("--separation", s.separation, "Cluster mean distance in standard deviations")
      ->check(CLI::PositiveNumber);
}

void add_source_flags(CLI::App* cmd, DataSource& src) {
  cmd->add_option("--data", src.csv, "Dataset CSV (otherwise a synthetic dataset is generated)");
  cmd->add_option("--class-names", src.class_names, "Class order for --data")->delimiter(',');
  add_synthetic_flags(cmd, src.synthetic, false);
}

void add_loop_flags(CLI::App* cmd, LoopOptions& l) {
  cmd->add_option("--batch-size", l.batch_size, "Instances queried per iteration")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--max-iterations", l.max_iterations, "Iteration budget");
  cmd->add_option("--checkpoints", l.checkpoints, "Iterations at which accuracy is recorded")
      ->delimiter(',');
  cmd->add_option("--committee-size", l.committee_size, "Members per committee");
  cmd->add_option("--retrain-every", l.retrain_every, "Iterations between retraining")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--epochs", l.epochs, "Maximum gradient descent epochs");
  cmd->add_option("--learning-rate", l.learning_rate, "Initial gradient step");
  cmd->add_option("--l2", l.l2, "L2 penalty");
  cmd->add_option("--tol", l.tol, "Gradient max-norm convergence tolerance");
  cmd->add_option("--log-base", l.log_base, "Log base for entropy scores");
}

alearn_synthetic_spec synthetic_spec(const SyntheticOptions& s, std::uint64_t seed) {
  alearn_synthetic_spec spec;
  alearn_synthetic_spec_init(&spec);
  spec.num_classes = s.classes;
  spec.dimensionality = s.dim;
  spec.seed_per_class = s.seed_per_class;
  spec.pool_per_class = s.pool_per_class;
  spec.irrelevant_count = s.irrelevant;
  spec.test_per_class = s.test_per_class;
  spec.cluster_separation = s.separation;
  spec.rng_seed = seed;
  return spec;
}

DatasetPtr open_dataset(const DataSource& src, std::uint64_t seed) {
  alearn_dataset* raw = nullptr;
  if (!src.csv.empty()) {
    std::vector<const char*> names;
    for (const auto& n : src.class_names) names.push_back(n.c_str());
    check(alearn_dataset_load_csv(src.csv.c_str(), names.empty() ? nullptr : names.data(),
                                  names.size(), &raw),
          "loading " + src.csv);
  } else {
    const auto spec = synthetic_spec(src.synthetic, seed);
    check(alearn_dataset_generate(&spec, &raw), "generating dataset");
  }
  return DatasetPtr(raw);
}

alearn_loop_config loop_config(const LoopOptions& l, const std::string& strategy,
                               std::uint64_t seed) {
  alearn_loop_config cfg;
  alearn_loop_config_init(&cfg);
  if (strategy.size() >= sizeof cfg.strategy) throw RuntimeFailure("strategy name too long");
  std::snprintf(cfg.strategy, sizeof cfg.strategy, "%s", strategy.c_str());
  cfg.batch_size = l.batch_size;
  cfg.max_iterations = l.max_iterations;
  if (l.checkpoints.size() > ALEARN_MAX_CHECKPOINTS) throw RuntimeFailure("too many checkpoints");
  // Checkpoints beyond the budget are dropped so --max-iterations alone works.
  cfg.num_checkpoints = 0;
  for (std::size_t c : l.checkpoints) {
    if (c <= l.max_iterations) cfg.checkpoints[cfg.num_checkpoints++] = c;
  }
  cfg.committee_size = l.committee_size;
  cfg.train.max_epochs = l.epochs;
  cfg.train.learning_rate = l.learning_rate;
  cfg.train.l2_penalty = l.l2;
  cfg.train.convergence_tol = l.tol;
  cfg.train.rng_seed = seed;
  cfg.retrain_every = l.retrain_every;
  cfg.rng_seed = seed;
  cfg.log_base = l.log_base;
  return cfg;
}

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string full(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

struct RunOutcome {
  std::string strategy;
  std::size_t repetition = 0;
  std::vector<std::size_t> iterations;
  std::vector<double> accuracies;
  double final_accuracy = 0.0;
};

// Runs every (strategy, repetition) pair, writing one curve CSV per run.
std::vector<RunOutcome> run_sweep(const alearn_dataset* ds, const std::vector<std::string>& strategies,
                                  std::size_t repetitions, const LoopOptions& loop,
                                  const GlobalOptions& g, std::size_t jobs, bool resume) {
  struct Task {
    std::string strategy;
    std::size_t rep;
  };
  std::vector<Task> tasks;
  for (const auto& s : strategies) {
    for (std::size_t r = 0; r < repetitions; ++r) tasks.push_back({s, r});
  }
  std::vector<RunOutcome> outcomes(tasks.size());
  std::vector<std::string> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;

  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      const Task& t = tasks[i];
      try {
        const auto cfg = loop_config(loop, t.strategy, g.rng_seed + t.rep);
        const std::string stem = t.strategy + "_rep" + std::to_string(t.rep);
        const fs::path ckpt = fs::path(g.out_dir) / ("checkpoint_" + stem + ".txt");
        alearn_run* raw = nullptr;
        check(alearn_run_loop(ds, &cfg, ckpt.c_str(), resume ? 1 : 0, &raw),
              "run " + stem);
        RunPtr run(raw);
        const fs::path curve = fs::path(g.out_dir) / ("curve_" + stem + ".csv");
        check(alearn_run_write_curve(run.get(), curve.c_str()), "writing " + curve.string());
        RunOutcome& o = outcomes[i];
        o.strategy = t.strategy;
        o.repetition = t.rep;
        o.final_accuracy = alearn_run_final_accuracy(run.get());
        for (std::size_t p = 0; p < alearn_run_curve_size(run.get()); ++p) {
          std::size_t it = 0;
          double acc = 0.0;
          check(alearn_run_curve_point(run.get(), p, &it, nullptr, &acc), "reading curve");
          o.iterations.push_back(it);
          o.accuracies.push_back(acc);
        }
        if (g.verbose) {
          std::lock_guard lock(log_mutex);
          std::cerr << "finished " << stem << " final accuracy " << fixed2(o.final_accuracy)
                    << '\n';
        }
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < std::max<std::size_t>(jobs, 1); ++j) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (const auto& e : errors) {
    if (!e.empty()) throw RuntimeFailure(e);
  }
  return outcomes;
}

int cmd_generate(const GlobalOptions& g, const SyntheticOptions& s, const std::string& output) {
  const auto spec = synthetic_spec(s, g.rng_seed);
  alearn_dataset* raw = nullptr;
  check(alearn_dataset_generate(&spec, &raw), "generating dataset");
  DatasetPtr ds(raw);
  fs::path path = output.empty() ? fs::path(g.out_dir) / "dataset.csv" : fs::path(output);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  check(alearn_dataset_write_csv(ds.get(), path.c_str()), "writing " + path.string());
  std::size_t seed = 0, pool = 0, test = 0, irrelevant = 0;
  alearn_dataset_sizes(ds.get(), &seed, &pool, &test);
  alearn_dataset_irrelevant_count(ds.get(), &irrelevant);
  std::cout << "seed=" << seed << " pool=" << pool << " test=" << test
            << " irrelevant=" << irrelevant << '\n'
            << "wrote " << path.string() << '\n';
  return kExitOk;
}

int cmd_run(const GlobalOptions& g, const DataSource& src, const LoopOptions& loop,
            const std::vector<std::string>& strategies, std::size_t repetitions, std::size_t jobs,
            bool resume) {
  if (strategies.empty()) throw CLI::ValidationError("--strategies", "at least one strategy");
  fs::create_directories(g.out_dir);
  DatasetPtr ds = open_dataset(src, g.rng_seed);
  const auto outcomes = run_sweep(ds.get(), strategies, repetitions, loop, g, jobs, resume);

  // Mean accuracy per (strategy, checkpoint) over repetitions.
  std::vector<std::size_t> columns;
  for (std::size_t c : loop.checkpoints) {
    if (c <= loop.max_iterations) columns.push_back(c);
  }
  std::ofstream csv(fs::path(g.out_dir) / "summary.csv");
  csv << "strategy";
  for (std::size_t c : columns) csv << ',' << c;
  csv << '\n';
  std::cout << "strategy";
  for (std::size_t c : columns) std::cout << '\t' << c;
  std::cout << '\n';
  for (const auto& s : strategies) {
    csv << s;
    std::cout << s;
    for (std::size_t c : columns) {
      double sum = 0.0;
      std::size_t count = 0;
      for (const auto& o : outcomes) {
        if (o.strategy != s) continue;
        for (std::size_t p = 0; p < o.iterations.size(); ++p) {
          if (o.iterations[p] == c) {
            sum += o.accuracies[p];
            ++count;
          }
        }
      }
      if (count == 0) {
        csv << ',';
        std::cout << "\t-";
      } else {
        csv << ',' << full(sum / static_cast<double>(count));
        std::cout << '\t' << fixed2(sum / static_cast<double>(count));
      }
    }
    csv << '\n';
    std::cout << '\n';
  }
  if (!csv) throw RuntimeFailure("writing summary.csv failed");
  return kExitOk;
}

int cmd_baselines(const GlobalOptions& g, const DataSource& src, const LoopOptions& loop,
                  const std::vector<std::string>& strategies, std::size_t repetitions,
                  std::size_t jobs) {
  fs::create_directories(g.out_dir);
  DatasetPtr ds = open_dataset(src, g.rng_seed);
  const auto cfg = loop_config(loop, "lc", g.rng_seed);
  double supervised = 0.0, noisy = 0.0;
  check(alearn_baseline_supervised(ds.get(), &cfg.train, &supervised), "baseline_supervised");
  check(alearn_baseline_noisy_pool(ds.get(), &cfg.train, &noisy), "baseline_noisy_pool");

  std::vector<std::pair<std::string, double>> rows{{"baseline_supervised", supervised},
                                                   {"baseline_noisy_pool", noisy}};
  if (!strategies.empty()) {
    const auto outcomes = run_sweep(ds.get(), strategies, repetitions, loop, g, jobs, false);
    for (const auto& s : strategies) {
      double sum = 0.0;
      std::size_t count = 0;
      for (const auto& o : outcomes) {
        if (o.strategy == s) {
          sum += o.final_accuracy;
          ++count;
        }
      }
      rows.emplace_back(s, sum / static_cast<double>(std::max<std::size_t>(count, 1)));
    }
  }
  std::ofstream csv(fs::path(g.out_dir) / "baselines.csv");
  csv << "method,accuracy\n";
  std::cout << "method\taccuracy\n";
  for (const auto& [name, acc] : rows) {
    csv << name << ',' << full(acc) << '\n';
    std::cout << name << '\t' << fixed2(acc) << '\n';
  }
  if (!csv) throw RuntimeFailure("writing baselines.csv failed");
  return kExitOk;
}

std::atomic<bool> g_stop_requested{false};

extern "C" void on_signal(int) { g_stop_requested = true; }

int cmd_serve(const GlobalOptions& g, const DataSource& src, const LoopOptions& loop,
              const std::string& strategy, const std::string& host, int port,
              const std::string& static_dir, const std::string& checkpoint, bool resume,
              std::uint64_t timeout_ms) {
  DatasetPtr ds = open_dataset(src, g.rng_seed);
  const auto cfg = loop_config(loop, strategy, g.rng_seed);
  alearn_server_options opts;
  alearn_server_options_init(&opts);
  opts.host = host.c_str();
  opts.port = port;
  opts.static_dir = static_dir.empty() ? nullptr : static_dir.c_str();
  opts.checkpoint_path = checkpoint.empty() ? nullptr : checkpoint.c_str();
  opts.resume = resume ? 1 : 0;
  opts.query_timeout_ms = timeout_ms;
  alearn_server* raw = nullptr;
  check(alearn_server_create(ds.get(), &cfg, &opts, &raw), "starting server");
  ServerPtr server(raw);

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::atomic<bool> finished{false};
  std::thread watcher([&] {
    while (!finished && !g_stop_requested) {
      std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
    // A stop issued before the accept loop starts is lost, so repeat it.
    while (!finished) {
      alearn_server_stop(server.get());
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
  });
  std::cout << "listening on http://" << host << ':' << alearn_server_port(server.get())
            << std::endl;
  const alearn_status status = alearn_server_run(server.get());
  finished = true;
  watcher.join();
  check(status, "serving");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pool-based active learning experiments and annotation server"};
  app.set_config("--config", "", "key=value config file with [section] headers");
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--out-dir", g.out_dir, "Directory for generated files");
  app.add_option("--rng-seed", g.rng_seed, "Base random seed");
  app.add_flag("--verbose,-v", g.verbose, "Progress messages on stderr");

  SyntheticOptions gen_opts;
  std::string gen_output;
  auto* generate = app.add_subcommand("generate", "Write a synthetic dataset CSV");
  add_synthetic_flags(generate, gen_opts, true);
  generate->add_option("--output,-o", gen_output, "Output path (default OUT_DIR/dataset.csv)");

  DataSource run_src;
  LoopOptions run_loop;
  std::vector<std::string> run_strategies{"lc", "ms", "es"};
  std::size_t run_reps = 1;
  std::size_t run_jobs = 1;
  bool run_resume = false;
  auto* run = app.add_subcommand("run", "Simulated strategy sweep with learning curves");
  add_source_flags(run, run_src);
  add_loop_flags(run, run_loop);
  run->add_option("--strategies", run_strategies, "Strategies: lc,ms,es,ve,ce,md,random")
      ->delimiter(',');
  run->add_option("--repetitions", run_reps, "Runs per strategy")->check(CLI::PositiveNumber);
  run->add_option("--jobs", run_jobs, "Parallel runs")->check(CLI::PositiveNumber);
  run->add_flag("--resume", run_resume, "Continue from checkpoints in OUT_DIR");

  DataSource base_src;
  LoopOptions base_loop;
  std::vector<std::string> base_strategies;
  std::size_t base_reps = 1;
  std::size_t base_jobs = 1;
  auto* baselines = app.add_subcommand("baselines", "Compare strategies with the two baselines");
  add_source_flags(baselines, base_src);
  add_loop_flags(baselines, base_loop);
  baselines->add_option("--strategies", base_strategies, "Strategies to compare")
      ->delimiter(',');
  baselines->add_option("--repetitions", base_reps, "Runs per strategy")
      ->check(CLI::PositiveNumber);
  baselines->add_option("--jobs", base_jobs, "Parallel runs")->check(CLI::PositiveNumber);

  DataSource serve_src;
  LoopOptions serve_loop;
  std::string serve_strategy = "lc";
  std::string serve_host = "127.0.0.1";
  int serve_port = 8080;
  std::string serve_static;
  std::string serve_checkpoint;
  bool serve_resume = false;
  std::uint64_t serve_timeout = 0;
  auto* serve = app.add_subcommand("serve", "Annotation HTTP server driven by a human oracle");
  add_source_flags(serve, serve_src);
  add_loop_flags(serve, serve_loop);
  serve->add_option("--strategy", serve_strategy, "Query strategy");
  serve->add_option("--host", serve_host, "Bind address");
  serve->add_option("--port", serve_port, "Port (0 picks a free one)");
  serve->add_option("--static-dir", serve_static, "UI bundle served at /");
  serve->add_option("--checkpoint", serve_checkpoint, "Loop checkpoint file");
  serve->add_flag("--resume", serve_resume, "Continue from --checkpoint");
  serve->add_option("--query-timeout-ms", serve_timeout, "Re-issue abandoned queries (0: never)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*generate) return cmd_generate(g, gen_opts, gen_output);
    if (*run) {
      return cmd_run(g, run_src, run_loop, run_strategies, run_reps, run_jobs, run_resume);
    }
    if (*baselines) {
      return cmd_baselines(g, base_src, base_loop, base_strategies, base_reps, base_jobs);
    }
    if (*serve) {
      return cmd_serve(g, serve_src, serve_loop, serve_strategy, serve_host, serve_port,
                       serve_static, serve_checkpoint, serve_resume, serve_timeout);
    }
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
