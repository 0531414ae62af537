// Copyright 2026 The alearn Authors
// SPDX-License-Identifier: Apache-2.0

#include "alearn/annotation_service.hpp"

#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <random>

namespace alearn {

namespace {

std::string iso8601(Clock::time_point t) {
  const std::time_t secs = Clock::to_time_t(t);
  std::tm utc{};
  gmtime_r(&secs, &utc);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buf;
}

std::string feature_summary(const Example& ex) {
  constexpr std::size_t kShown = 4;
  double norm = 0.0;
  for (double v : ex.features) norm += v * v;
  std::string out = "d=" + std::to_string(ex.features.size()) + " [";
  for (std::size_t k = 0; k < ex.features.size() && k < kShown; ++k) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%.4g", k ? ", " : "", ex.features[k]);
    out += buf;
  }
  if (ex.features.size() > kShown) out += ", ...";
  char buf[48];
  std::snprintf(buf, sizeof buf, "] |x|=%.4g", std::sqrt(norm));
  return out + buf;
}

}  // namespace

nlohmann::json to_json(const PendingQuery& q) {
  return {
      {"query_id", q.query_id},
      {"instance_id", q.instance_id},
      {"display_payload",
       {{"kind", q.payload_is_asset ? "asset" : "features"}, {"value", q.display_payload}}},
      {"strategy_score", q.strategy_score},
      {"issued_at", iso8601(q.issued_at)},
  };
}

nlohmann::json to_json(const LearningCurve& curve) {
  auto arr = nlohmann::json::array();
  for (const auto& p : curve.points) {
    arr.push_back({{"iteration", p.iteration},
                   {"labeled_size", p.labeled_size},
                   {"accuracy", p.accuracy}});
  }
  return arr;
}

AnnotationService::AnnotationService(std::shared_ptr<const Dataset> ds, LoopConfig cfg,
                                     ServiceOptions options)
    : ds_(std::move(ds)), options_(std::move(options)) {
  if (!ds_) throw ConfigError("annotation service needs a dataset");
  if (options_.resume && options_.checkpoint_file &&
      std::filesystem::exists(*options_.checkpoint_file)) {
    std::ifstream in(*options_.checkpoint_file);
    if (!in) throw IoError("cannot read checkpoint '" + options_.checkpoint_file->string() + "'");
    learner_ = std::make_unique<ActiveLearner>(ActiveLearner::restore(*ds_, std::move(cfg), in));
  } else {
    learner_ = std::make_unique<ActiveLearner>(*ds_, std::move(cfg));
  }
  salt_ = std::random_device{}();
  salt_ = (salt_ << 32) ^ std::random_device{}();
}

std::string AnnotationService::make_query_id() {
  const std::uint64_t n = ++query_counter_;
  char buf[48];
  std::snprintf(buf, sizeof buf, "q%llu-%016llx", static_cast<unsigned long long>(n),
                static_cast<unsigned long long>(salt_ ^ (n * 0x9e3779b97f4a7c15ULL)));
  return buf;
}

bool AnnotationService::expired(const PendingQuery& q) const {
  return options_.query_timeout && options_.now() - q.issued_at >= *options_.query_timeout;
}

nlohmann::json AnnotationService::status_locked() const {
  const LoopState& st = learner_->state();
  nlohmann::json doc = {
      {"iteration", st.iteration},
      {"labeled_size", st.labeled.size()},
      {"pool_size", st.pool.size()},
      {"discarded", st.discarded.size()},
      {"strategy", std::string(to_string(learner_->config().strategy))},
      {"complete", learner_->done()},
      {"curve", to_json(st.curve)},
  };
  if (auto acc = learner_->test_accuracy()) {
    doc["test_accuracy"] = *acc;
  } else {
    doc["test_accuracy"] = nullptr;
  }
  return doc;
}

nlohmann::json AnnotationService::status() const {
  std::lock_guard lock(mutex_);
  return status_locked();
}

PendingQuery AnnotationService::next_query() {
  std::lock_guard lock(mutex_);
  if (pending_ && !expired(*pending_)) return *pending_;
  pending_.reset();
  if (learner_->done()) throw PoolExhaustedError("annotation complete");

  const std::vector<Selection> picked = learner_->select();
  const Selection& sel = picked.front();
  const Example& ex = learner_->pool_example(sel.id);
  PendingQuery q;
  q.query_id = make_query_id();
  q.instance_id = sel.id;
  q.payload_is_asset = ex.source_tag.has_value();
  q.display_payload = ex.source_tag ? *ex.source_tag : feature_summary(ex);
  q.strategy_score = sel.score;
  q.issued_at = options_.now();
  pending_ = q;
  return q;
}

nlohmann::json AnnotationService::submit(const LabelSubmission& s) {
  std::lock_guard lock(mutex_);
  if (!pending_ || pending_->query_id != s.query_id) {
    throw ConflictError("query '" + s.query_id + "' is not outstanding");
  }
  if (expired(*pending_)) {
    pending_.reset();
    throw ConflictError("query '" + s.query_id + "' has expired");
  }
  if (s.label && (*s.label < 0 || static_cast<std::size_t>(*s.label) >= ds_->num_classes)) {
    throw ConfigError("class index " + std::to_string(*s.label) + " outside [0, " +
                      std::to_string(ds_->num_classes) + ")");
  }
  const OracleResponse response =
      s.label ? OracleResponse::make_label(*s.label) : OracleResponse::make_reject();
  learner_->acquire(pending_->instance_id, response);
  learner_->end_iteration();
  transcript_.push_back(response);
  pending_.reset();
  persist();
  return status_locked();
}

void AnnotationService::persist() const {
  if (!options_.checkpoint_file) return;
  const auto tmp = options_.checkpoint_file->string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint '" + tmp + "'");
    learner_->save_checkpoint(out);
  }
  std::filesystem::rename(tmp, *options_.checkpoint_file);
}

nlohmann::json AnnotationService::curve() const {
  std::lock_guard lock(mutex_);
  return to_json(learner_->state().curve);
}

nlohmann::json AnnotationService::classes() const {
  auto arr = nlohmann::json::array();
  for (std::size_t i = 0; i < ds_->class_names.size(); ++i) {
    arr.push_back({{"index", i}, {"name", ds_->class_names[i]}});
  }
  return arr;
}

std::vector<OracleResponse> AnnotationService::transcript() const {
  std::lock_guard lock(mutex_);
  return transcript_;
}

std::uint64_t AnnotationService::state_hash() const {
  std::lock_guard lock(mutex_);
  return learner_->hash();
}

LoopState AnnotationService::snapshot() const {
  std::lock_guard lock(mutex_);
  return learner_->state();
}

}  // namespace alearn
