// Copyright 2026 The alearn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "alearn/dataset.hpp"
#include "alearn/engine.hpp"

namespace alearn {

using Clock = std::chrono::system_clock;

struct ServiceOptions {
  /// Outstanding queries older than this are re-issued. Never expire when unset.
  std::optional<std::chrono::milliseconds> query_timeout;
  /// Loop checkpoint rewritten after every accepted submission.
  std::optional<std::filesystem::path> checkpoint_file;
  bool resume = false;
  /// Time source, replaceable in tests.
  std::function<Clock::time_point()> now = [] { return Clock::now(); };
};

struct PendingQuery {
  std::string query_id;
  InstanceId instance_id;
  /// Asset reference taken from the source tag, or a feature summary.
  std::string display_payload;
  bool payload_is_asset = false;
  double strategy_score = 0.0;
  Clock::time_point issued_at;
};

struct LabelSubmission {
  std::string query_id;
  /// Class index, or nullopt for a reject.
  std::optional<int> label;
  std::optional<std::string> annotator_id;
};

nlohmann::json to_json(const PendingQuery& q);
nlohmann::json to_json(const LearningCurve& curve);

/// Drives an ActiveLearner from human answers, one query at a time.
///
/// All methods are safe to call concurrently; mutations are serialized so
/// each query id changes the state at most once.
class AnnotationService {
 public:
  AnnotationService(std::shared_ptr<const Dataset> ds, LoopConfig cfg, ServiceOptions options = {});

  nlohmann::json status() const;

  /// The outstanding query, or a new one chosen by the configured strategy.
  /// Throws PoolExhaustedError once the loop is complete.
  PendingQuery next_query();

  /// Applies a submission for the outstanding query and returns the new
  /// status. Throws ConflictError for unknown, expired or already-used query
  /// ids and ConfigError for class indices outside [0, m).
  nlohmann::json submit(const LabelSubmission& submission);

  nlohmann::json curve() const;
  nlohmann::json classes() const;

  /// Outcomes applied so far, in order; replaying them through run_loop
  /// reproduces this loop.
  std::vector<OracleResponse> transcript() const;
  std::uint64_t state_hash() const;
  LoopState snapshot() const;

 private:
  std::string make_query_id();
  nlohmann::json status_locked() const;
  bool expired(const PendingQuery& q) const;
  void persist() const;

  std::shared_ptr<const Dataset> ds_;
  ServiceOptions options_;
  mutable std::mutex mutex_;
  std::unique_ptr<ActiveLearner> learner_;
  std::optional<PendingQuery> pending_;
  std::vector<OracleResponse> transcript_;
  std::uint64_t query_counter_ = 0;
  std::uint64_t salt_ = 0;
};

}  // namespace alearn
