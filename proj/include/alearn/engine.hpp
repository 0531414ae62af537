// Copyright 2026 The alearn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "alearn/classifier.hpp"
#include "alearn/committee.hpp"
#include "alearn/dataset.hpp"
#include "alearn/errors.hpp"

namespace alearn {

enum class Strategy {
  LeastConfidence,
  MarginSampling,
  EntropySampling,
  VoteEntropy,
  ConsensusEntropy,
  MaxDisagreement,
  Random,
};

/// CLI/config names: lc, ms, es, ve, ce, md, random.
std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view name);
bool is_committee_strategy(Strategy s);

inline const std::vector<std::size_t> kDefaultCheckpoints{1, 250, 500, 750, 1000, 1250, 1500, 2000};

struct LoopConfig {
  Strategy strategy = Strategy::LeastConfidence;
  std::size_t batch_size = 1;
  std::size_t max_iterations = 2000;
  std::vector<std::size_t> checkpoint_iterations = kDefaultCheckpoints;
  std::size_t committee_size = 3;
  TrainConfig classifier_cfg;
  std::size_t retrain_every = 1;
  std::uint64_t rng_seed = 0;
  /// Log base for entropy-type scores (es, ve, ce).
  double log_base = 10.0;

  void validate() const;
};

struct CurvePoint {
  std::size_t iteration = 0;
  std::size_t labeled_size = 0;
  double accuracy = 0.0;

  bool operator==(const CurvePoint&) const = default;
};

struct LearningCurve {
  std::vector<CurvePoint> points;

  bool operator==(const LearningCurve&) const = default;
};

struct OracleResponse {
  enum class Outcome { Label, Reject };

  Outcome outcome = Outcome::Reject;
  int label = -1;
  std::optional<std::chrono::milliseconds> latency_hint;

  static OracleResponse make_label(int cls) { return {Outcome::Label, cls, std::nullopt}; }
  static OracleResponse make_reject() { return {Outcome::Reject, -1, std::nullopt}; }

  bool is_label() const { return outcome == Outcome::Label; }
};

/// Label source queried once per selected instance. Implementations signal
/// transient failures by throwing OracleError.
class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual OracleResponse query(const Example& instance) = 0;
};

/// Answers from ground truth: Label(true_class) for relevant pool items,
/// Reject for irrelevant ones.
class SimulatedOracle final : public Oracle {
 public:
  explicit SimulatedOracle(const Dataset& ds);
  OracleResponse query(const Example& instance) override;

 private:
  std::unordered_map<InstanceId, OracleResponse> answers_;
};

/// Replays a fixed sequence of responses, e.g. a recorded annotation session.
class ScriptedOracle final : public Oracle {
 public:
  explicit ScriptedOracle(std::vector<OracleResponse> script) : script_(std::move(script)) {}
  OracleResponse query(const Example& instance) override;

 private:
  std::vector<OracleResponse> script_;
  std::size_t next_ = 0;
};

struct LabeledItem {
  InstanceId id;
  int label = -1;

  bool operator==(const LabeledItem&) const = default;
};

using TrainedModel = std::variant<ModelParams, Committee>;

struct LoopState {
  std::vector<LabeledItem> labeled;
  std::vector<InstanceId> pool;
  std::size_t iteration = 0;
  TrainedModel model;
  LearningCurve curve;
  std::vector<InstanceId> discarded;
};

/// FNV-1a digest of the loop state: ids, labels, iteration, curve and model
/// parameters.
std::uint64_t state_hash(const LoopState& state);

/// One instance picked by the query strategy.
struct Selection {
  std::size_t pool_position = 0;
  InstanceId id;
  double score = 0.0;
};

/// Oracle attempts per instance before a run is aborted.
inline constexpr int kOracleAttempts = 3;

/// Pool-based acquisition loop, advanced one iteration at a time.
///
/// The dataset must outlive the learner. The labeled set starts as the seed
/// set and the model is trained immediately; a checkpoint scheduled at
/// iteration 1 records that seed-only model.
class ActiveLearner {
 public:
  ActiveLearner(const Dataset& ds, LoopConfig cfg);

  /// Restores a learner from `save_checkpoint` output.
  static ActiveLearner restore(const Dataset& ds, LoopConfig cfg, std::istream& checkpoint);

  const LoopConfig& config() const { return cfg_; }
  const LoopState& state() const { return state_; }
  const Dataset& dataset() const { return *ds_; }

  /// True once max_iterations is reached or the pool is empty.
  bool done() const;

  /// Runs the strategy over the remaining pool and returns up to batch_size
  /// instances. Advances the random-strategy generator. Throws
  /// PoolExhaustedError when the pool is empty.
  std::vector<Selection> select();

  const Example& pool_example(std::string_view id) const;

  /// Moves `id` out of the pool: into the labeled set on Label, into the
  /// discarded list on Reject. Throws NotFoundError for ids not in the pool and
  /// ConfigError for labels outside [0, m).
  void acquire(std::string_view id, const OracleResponse& response);

  /// Closes the iteration: retrains when due and records scheduled checkpoints.
  void end_iteration();

  /// select + query + acquire + end_iteration. Throws OracleError after
  /// kOracleAttempts consecutive failures on one instance; the learner is
  /// left unchanged when it throws.
  void step(Oracle& oracle);

  /// Test accuracy of the current model, or nullopt without a test set.
  std::optional<double> test_accuracy() const;

  std::uint64_t hash() const { return state_hash(state_); }

  void save_checkpoint(std::ostream& out) const;

 private:
  void retrain();
  void record_checkpoint();
  bool is_checkpoint(std::size_t iteration) const;

  const Dataset* ds_;
  LoopConfig cfg_;
  LoopState state_;
  std::mt19937_64 rng_;
  std::vector<std::size_t> pool_rows_;  // index into ds_->pool, parallel to state_.pool
  std::unordered_map<std::string_view, std::size_t> pool_index_;  // id -> ds_->pool index
  Matrix pool_x_;
  Matrix labeled_x_;
  std::vector<int> labeled_y_;
  Matrix test_x_;
  std::vector<int> test_y_;
  bool dirty_ = false;
};

/// Thrown when the oracle keeps failing; carries the curve recorded so far.
class LoopAborted : public OracleError {
 public:
  LoopAborted(const std::string& what, LearningCurve partial)
      : OracleError(what), partial_curve(std::move(partial)) {}

  LearningCurve partial_curve;
};

struct RunOptions {
  /// Written after every recorded checkpoint and at the end of the run.
  std::optional<std::filesystem::path> checkpoint_file;
  /// Continue from `checkpoint_file` when it exists.
  bool resume = false;
};

struct RunResult {
  LearningCurve curve;
  LoopState state;
  double final_accuracy = 0.0;
};

/// Runs the loop to max_iterations or pool exhaustion.
RunResult run_loop(const Dataset& ds, const LoopConfig& cfg, Oracle& oracle,
                   const RunOptions& options = {});

/// Seed set plus every relevant pool item with its true class.
double baseline_supervised(const Dataset& ds, const TrainConfig& cfg);

/// Seed set plus the whole pool with stored (possibly noisy) classes.
double baseline_noisy_pool(const Dataset& ds, const TrainConfig& cfg);

/// `iteration,labeled_size,accuracy` rows, accuracy at full precision.
void export_curve(const LearningCurve& curve, const std::filesystem::path& path);
void write_curve(const LearningCurve& curve, std::ostream& out);
LearningCurve read_curve(std::istream& in);
LearningCurve load_curve(const std::filesystem::path& path);

}  // namespace alearn
