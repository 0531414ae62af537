// Copyright 2026 The alearn Authors
// SPDX-License-Identifier: Apache-2.0

#include "alearn/engine.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "alearn/selection.hpp"
#include "alearn/uncertainty.hpp"

namespace alearn {

namespace {

class Fnv1a {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= p[i];
      h_ *= 0x100000001b3ULL;
    }
  }
  void u64(std::uint64_t v) { bytes(&v, sizeof v); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u64(s.size());
    bytes(s.data(), s.size());
  }
  void model(const ModelParams& m) {
    u64(m.num_classes());
    u64(m.dimensionality());
    for (Eigen::Index i = 0; i < m.weights.size(); ++i) f64(m.weights.data()[i]);
    for (Eigen::Index i = 0; i < m.biases.size(); ++i) f64(m.biases(i));
  }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& tok, std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw ParseError("bad number '" + tok + "'", line);
  }
  return v;
}

std::size_t parse_count(const std::string& tok, std::size_t line) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw ParseError("bad count '" + tok + "'", line);
  }
  return v;
}

std::vector<int> labels_of(std::span<const Example> examples) {
  std::vector<int> y;
  y.reserve(examples.size());
  for (const auto& ex : examples) {
    if (!ex.true_class) throw IntegrityError("example '" + ex.id + "' has no class");
    y.push_back(*ex.true_class);
  }
  return y;
}

double train_and_score(const Dataset& ds, std::vector<const Example*> training,
                       const TrainConfig& cfg) {
  if (ds.test_set.empty()) throw ConfigError("baseline needs a nonempty test set");
  Matrix x(static_cast<Eigen::Index>(training.size()),
           static_cast<Eigen::Index>(ds.dimensionality));
  std::vector<int> y;
  for (std::size_t i = 0; i < training.size(); ++i) {
    const Example& ex = *training[i];
    if (!ex.true_class) throw IntegrityError("pool item '" + ex.id + "' has no class");
    x.row(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Vector>(ex.features.data(), x.cols()).transpose();
    y.push_back(*ex.true_class);
  }
  const ModelParams model = train(x, y, ds.num_classes, cfg);
  return accuracy(model, feature_matrix(ds.test_set), labels_of(ds.test_set));
}

}  // namespace

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::LeastConfidence: return "lc";
    case Strategy::MarginSampling: return "ms";
    case Strategy::EntropySampling: return "es";
    case Strategy::VoteEntropy: return "ve";
    case Strategy::ConsensusEntropy: return "ce";
    case Strategy::MaxDisagreement: return "md";
    case Strategy::Random: return "random";
  }
  return "?";
}

Strategy parse_strategy(std::string_view name) {
  for (Strategy s : {Strategy::LeastConfidence, Strategy::MarginSampling,
                     Strategy::EntropySampling, Strategy::VoteEntropy,
                     Strategy::ConsensusEntropy, Strategy::MaxDisagreement, Strategy::Random}) {
    if (to_string(s) == name) return s;
  }
  throw ConfigError("unknown strategy '" + std::string(name) + "'");
}

bool is_committee_strategy(Strategy s) {
  return s == Strategy::VoteEntropy || s == Strategy::ConsensusEntropy ||
         s == Strategy::MaxDisagreement;
}

void LoopConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (retrain_every < 1) throw ConfigError("retrain_every must be at least 1");
  if (is_committee_strategy(strategy) && committee_size < 2) {
    throw ConfigError("committee_size must be at least 2");
  }
  for (std::size_t i = 0; i < checkpoint_iterations.size(); ++i) {
    const std::size_t c = checkpoint_iterations[i];
    if (c < 1 || c > max_iterations) {
      throw ConfigError("checkpoint " + std::to_string(c) + " outside [1, max_iterations]");
    }
    if (i > 0 && c <= checkpoint_iterations[i - 1]) {
      throw ConfigError("checkpoints must be strictly increasing");
    }
  }
  if (!(log_base > 0.0) || log_base == 1.0) throw ConfigError("log_base must be positive, not 1");
  classifier_cfg.validate();
}

SimulatedOracle::SimulatedOracle(const Dataset& ds) {
  for (const Example& ex : ds.pool) {
    OracleResponse r = OracleResponse::make_reject();
    if (ex.relevant) {
      if (!ex.true_class) throw IntegrityError("relevant pool item '" + ex.id + "' has no class");
      r = OracleResponse::make_label(*ex.true_class);
    }
    answers_.emplace(ex.id, r);
  }
}

OracleResponse SimulatedOracle::query(const Example& instance) {
  auto it = answers_.find(instance.id);
  if (it == answers_.end()) throw NotFoundError("unknown pool id '" + instance.id + "'");
  return it->second;
}

OracleResponse ScriptedOracle::query(const Example&) {
  if (next_ >= script_.size()) throw OracleError("scripted oracle has no responses left");
  return script_[next_++];
}

std::uint64_t state_hash(const LoopState& state) {
  Fnv1a h;
  h.u64(state.iteration);
  h.u64(state.labeled.size());
  for (const auto& item : state.labeled) {
    h.str(item.id);
    h.u64(static_cast<std::uint64_t>(item.label));
  }
  h.u64(state.pool.size());
  for (const auto& id : state.pool) h.str(id);
  h.u64(state.discarded.size());
  for (const auto& id : state.discarded) h.str(id);
  h.u64(state.curve.points.size());
  for (const auto& p : state.curve.points) {
    h.u64(p.iteration);
    h.u64(p.labeled_size);
    h.f64(p.accuracy);
  }
  if (const auto* single = std::get_if<ModelParams>(&state.model)) {
    h.u64(1);
    h.model(*single);
  } else {
    const auto& committee = std::get<Committee>(state.model);
    h.u64(committee.size());
    for (const auto& m : committee.members) h.model(m);
  }
  return h.value();
}

ActiveLearner::ActiveLearner(const Dataset& ds, LoopConfig cfg)
    : ds_(&ds), cfg_(std::move(cfg)), rng_(cfg_.rng_seed) {
  cfg_.validate();
  ds.validate();
  if (ds.seed_set.empty()) throw ConfigError("seed set is empty");

  const auto d = static_cast<Eigen::Index>(ds.dimensionality);
  labeled_x_.resize(static_cast<Eigen::Index>(ds.seed_set.size()), d);
  for (std::size_t i = 0; i < ds.seed_set.size(); ++i) {
    const Example& ex = ds.seed_set[i];
    labeled_x_.row(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Vector>(ex.features.data(), d).transpose();
    labeled_y_.push_back(*ex.true_class);
    state_.labeled.push_back({ex.id, *ex.true_class});
  }
  if (std::unordered_set<int>(labeled_y_.begin(), labeled_y_.end()).size() < 2) {
    throw TrainingError("seed set must contain at least 2 classes");
  }

  pool_x_ = feature_matrix(ds.pool);
  for (std::size_t i = 0; i < ds.pool.size(); ++i) {
    pool_rows_.push_back(i);
    pool_index_.emplace(ds.pool[i].id, i);
    state_.pool.push_back(ds.pool[i].id);
  }
  test_x_ = feature_matrix(ds.test_set);
  test_y_ = labels_of(ds.test_set);

  retrain();
  if (is_checkpoint(1)) record_checkpoint();
}

bool ActiveLearner::is_checkpoint(std::size_t iteration) const {
  return std::binary_search(cfg_.checkpoint_iterations.begin(), cfg_.checkpoint_iterations.end(),
                            iteration);
}

bool ActiveLearner::done() const {
  return state_.iteration >= cfg_.max_iterations || state_.pool.empty();
}

void ActiveLearner::retrain() {
  if (is_committee_strategy(cfg_.strategy)) {
    state_.model = train_committee(labeled_x_, labeled_y_, ds_->num_classes, cfg_.committee_size,
                                   cfg_.classifier_cfg, cfg_.rng_seed);
  } else {
    state_.model = train(labeled_x_, labeled_y_, ds_->num_classes, cfg_.classifier_cfg);
  }
  dirty_ = false;
}

std::optional<double> ActiveLearner::test_accuracy() const {
  if (test_y_.empty()) return std::nullopt;
  if (const auto* single = std::get_if<ModelParams>(&state_.model)) {
    return accuracy(*single, test_x_, test_y_);
  }
  return committee_accuracy(std::get<Committee>(state_.model), test_x_, test_y_);
}

void ActiveLearner::record_checkpoint() {
  const auto acc = test_accuracy();
  if (!acc) return;
  // Iteration 1 is recorded before the first acquisition.
  const std::size_t it = std::max<std::size_t>(state_.iteration, 1);
  if (!state_.curve.points.empty() && state_.curve.points.back().iteration >= it) return;
  state_.curve.points.push_back({it, state_.labeled.size(), *acc});
}

std::vector<Selection> ActiveLearner::select() {
  if (state_.pool.empty()) throw PoolExhaustedError("the unlabeled pool is exhausted");
  const std::size_t n = state_.pool.size();
  const std::size_t k = std::min(cfg_.batch_size, n);

  std::vector<std::size_t> chosen;
  std::vector<double> scores;
  if (cfg_.strategy == Strategy::Random) {
    std::vector<std::size_t> positions(n);
    for (std::size_t i = 0; i < n; ++i) positions[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(positions[i], positions[pick(rng_)]);
      chosen.push_back(positions[i]);
    }
    scores.assign(n, 0.0);
  } else {
    Matrix x(static_cast<Eigen::Index>(n), pool_x_.cols());
    for (std::size_t i = 0; i < n; ++i) {
      x.row(static_cast<Eigen::Index>(i)) = pool_x_.row(static_cast<Eigen::Index>(pool_rows_[i]));
    }
    if (is_committee_strategy(cfg_.strategy)) {
      DisagreementStrategy ds;
      ds.kind = cfg_.strategy == Strategy::VoteEntropy        ? DisagreementKind::VoteEntropy
                : cfg_.strategy == Strategy::ConsensusEntropy ? DisagreementKind::ConsensusEntropy
                                                              : DisagreementKind::MaxDisagreement;
      ds.log_base = cfg_.log_base;
      scores = disagreement_scores(member_posteriors(std::get<Committee>(state_.model), x), ds);
      chosen = top_k(scores, k, Rank::HighestFirst);
    } else {
      UncertaintyStrategy us;
      us.kind = cfg_.strategy == Strategy::LeastConfidence  ? UncertaintyKind::LeastConfidence
                : cfg_.strategy == Strategy::MarginSampling ? UncertaintyKind::MarginSampling
                                                            : UncertaintyKind::EntropySampling;
      us.entropy_log_base = cfg_.log_base;
      const PosteriorMatrix post{predict_proba(std::get<ModelParams>(state_.model), x), {}};
      scores = uncertainty_scores(post, us);
      chosen = top_k(scores, k,
                     us.kind == UncertaintyKind::MarginSampling ? Rank::LowestFirst
                                                                : Rank::HighestFirst);
    }
  }

  std::vector<Selection> out;
  for (std::size_t pos : chosen) out.push_back({pos, state_.pool[pos], scores[pos]});
  return out;
}

const Example& ActiveLearner::pool_example(std::string_view id) const {
  auto it = pool_index_.find(id);
  if (it == pool_index_.end()) throw NotFoundError("unknown pool id '" + std::string(id) + "'");
  return ds_->pool[it->second];
}

void ActiveLearner::acquire(std::string_view id, const OracleResponse& response) {
  auto pos = std::find(state_.pool.begin(), state_.pool.end(), id);
  if (pos == state_.pool.end()) {
    throw NotFoundError("'" + std::string(id) + "' is not in the unlabeled pool");
  }
  if (response.is_label() &&
      (response.label < 0 || static_cast<std::size_t>(response.label) >= ds_->num_classes)) {
    throw ConfigError("class index " + std::to_string(response.label) + " outside [0, " +
                      std::to_string(ds_->num_classes) + ")");
  }
  const auto offset = pos - state_.pool.begin();
  const std::size_t row = pool_rows_[static_cast<std::size_t>(offset)];
  if (response.is_label()) {
    const Eigen::Index n = labeled_x_.rows();
    labeled_x_.conservativeResize(n + 1, Eigen::NoChange);
    labeled_x_.row(n) = pool_x_.row(static_cast<Eigen::Index>(row));
    labeled_y_.push_back(response.label);
    state_.labeled.push_back({std::string(id), response.label});
    dirty_ = true;
  } else {
    state_.discarded.emplace_back(id);
  }
  state_.pool.erase(pos);
  pool_rows_.erase(pool_rows_.begin() + offset);
}

void ActiveLearner::end_iteration() {
  ++state_.iteration;
  const bool checkpoint = is_checkpoint(state_.iteration);
  const bool due = state_.iteration % cfg_.retrain_every == 0 || checkpoint || done();
  if (due && dirty_) retrain();
  if (checkpoint) record_checkpoint();
}

void ActiveLearner::step(Oracle& oracle) {
  // All answers are collected before any state changes, so a failed step
  // leaves the learner (including the random generator) as it was.
  const std::mt19937_64 rng_before = rng_;
  const std::vector<Selection> picks = select();
  std::vector<OracleResponse> answers;
  for (const Selection& sel : picks) {
    const Example& ex = pool_example(sel.id);
    for (int attempt = 1;; ++attempt) {
      try {
        answers.push_back(oracle.query(ex));
        break;
      } catch (const OracleError&) {
        if (attempt >= kOracleAttempts) {
          rng_ = rng_before;
          throw;
        }
      }
    }
  }
  for (const OracleResponse& r : answers) {
    if (r.is_label() && (r.label < 0 || static_cast<std::size_t>(r.label) >= ds_->num_classes)) {
      rng_ = rng_before;
      throw ConfigError("oracle returned class index " + std::to_string(r.label));
    }
  }
  for (std::size_t i = 0; i < picks.size(); ++i) acquire(picks[i].id, answers[i]);
  end_iteration();
}

void ActiveLearner::save_checkpoint(std::ostream& out) const {
  out << "alloop1\n";
  out << "strategy " << to_string(cfg_.strategy) << '\n';
  out << "iteration " << state_.iteration << '\n';
  out << "dirty " << (dirty_ ? 1 : 0) << '\n';
  out << "rng " << rng_ << '\n';
  out << "labeled " << state_.labeled.size() << '\n';
  for (const auto& item : state_.labeled) out << item.id << '\t' << item.label << '\n';
  out << "discarded " << state_.discarded.size() << '\n';
  for (const auto& id : state_.discarded) out << id << '\n';
  out << "curve " << state_.curve.points.size() << '\n';
  for (const auto& p : state_.curve.points) {
    out << p.iteration << ' ' << p.labeled_size << ' ' << format_double(p.accuracy) << '\n';
  }
  if (const auto* single = std::get_if<ModelParams>(&state_.model)) {
    out << "model single\n";
    save_model(*single, out);
  } else {
    out << "model committee\n";
    save_committee(std::get<Committee>(state_.model), out);
  }
  if (!out) throw IoError("checkpoint write failed");
}

ActiveLearner ActiveLearner::restore(const Dataset& ds, LoopConfig cfg, std::istream& in) {
  std::size_t line_no = 0;
  std::string line;
  auto next_line = [&]() -> std::string& {
    if (!std::getline(in, line)) throw ParseError("truncated checkpoint", line_no + 1);
    ++line_no;
    return line;
  };
  auto keyed = [&](std::string_view key) {
    std::string& l = next_line();
    if (l.rfind(std::string(key) + ' ', 0) != 0) {
      throw ParseError("expected '" + std::string(key) + "'", line_no);
    }
    return l.substr(key.size() + 1);
  };

  if (next_line() != "alloop1") throw ParseError("expected 'alloop1' header", line_no);
  const std::string strategy = keyed("strategy");
  if (strategy != to_string(cfg.strategy)) {
    throw ConfigError("checkpoint was written by strategy '" + strategy + "'");
  }
  const std::size_t iteration = parse_count(keyed("iteration"), line_no);
  const bool dirty = parse_count(keyed("dirty"), line_no) != 0;
  std::mt19937_64 rng;
  {
    std::istringstream rs(keyed("rng"));
    if (!(rs >> rng)) throw ParseError("bad generator state", line_no);
  }

  std::unordered_map<std::string_view, const Example*> by_id;
  for (const auto* part : {&ds.seed_set, &ds.pool}) {
    for (const auto& ex : *part) by_id.emplace(ex.id, &ex);
  }

  ActiveLearner learner(ds, cfg);
  LoopState& st = learner.state_;
  const auto d = static_cast<Eigen::Index>(ds.dimensionality);

  const std::size_t n_labeled = parse_count(keyed("labeled"), line_no);
  st.labeled.clear();
  learner.labeled_y_.clear();
  learner.labeled_x_.resize(static_cast<Eigen::Index>(n_labeled), d);
  std::unordered_set<std::string> removed;
  for (std::size_t i = 0; i < n_labeled; ++i) {
    const std::string& l = next_line();
    const auto tab = l.rfind('\t');
    if (tab == std::string::npos) throw ParseError("expected 'id<TAB>label'", line_no);
    LabeledItem item{l.substr(0, tab), static_cast<int>(parse_count(l.substr(tab + 1), line_no))};
    auto it = by_id.find(item.id);
    if (it == by_id.end()) throw IntegrityError("checkpoint id '" + item.id + "' not in dataset");
    if (static_cast<std::size_t>(item.label) >= ds.num_classes) {
      throw IntegrityError("checkpoint label out of range for '" + item.id + "'");
    }
    learner.labeled_x_.row(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Vector>(it->second->features.data(), d).transpose();
    learner.labeled_y_.push_back(item.label);
    removed.insert(item.id);
    st.labeled.push_back(std::move(item));
  }

  const std::size_t n_discarded = parse_count(keyed("discarded"), line_no);
  st.discarded.clear();
  for (std::size_t i = 0; i < n_discarded; ++i) {
    const std::string& id = next_line();
    if (!learner.pool_index_.contains(id)) {
      throw IntegrityError("discarded id '" + id + "' not in pool");
    }
    removed.insert(id);
    st.discarded.push_back(id);
  }

  st.pool.clear();
  learner.pool_rows_.clear();
  for (std::size_t i = 0; i < ds.pool.size(); ++i) {
    if (removed.contains(ds.pool[i].id)) continue;
    st.pool.push_back(ds.pool[i].id);
    learner.pool_rows_.push_back(i);
  }
  if (ds.seed_set.size() + ds.pool.size() !=
      st.labeled.size() + st.pool.size() + st.discarded.size()) {
    throw IntegrityError("checkpoint does not partition the seed set and pool");
  }

  const std::size_t n_curve = parse_count(keyed("curve"), line_no);
  st.curve.points.clear();
  for (std::size_t i = 0; i < n_curve; ++i) {
    std::istringstream ls(next_line());
    std::string a, b, c;
    if (!(ls >> a >> b >> c)) throw ParseError("bad curve point", line_no);
    st.curve.points.push_back(
        {parse_count(a, line_no), parse_count(b, line_no), parse_double(c, line_no)});
  }

  const std::string kind = keyed("model");
  if (kind == "single") {
    st.model = load_model(in);
  } else if (kind == "committee") {
    st.model = load_committee(in);
  } else {
    throw ParseError("unknown model kind '" + kind + "'", line_no);
  }
  st.iteration = iteration;
  learner.rng_ = rng;
  learner.dirty_ = dirty;
  return learner;
}

RunResult run_loop(const Dataset& ds, const LoopConfig& cfg, Oracle& oracle,
                   const RunOptions& options) {
  if (ds.pool.empty()) throw ConfigError("the unlabeled pool is empty");
  if (ds.test_set.empty()) throw ConfigError("the test set is empty");

  auto make_learner = [&] {
    if (options.resume && options.checkpoint_file && std::filesystem::exists(*options.checkpoint_file)) {
      std::ifstream in(*options.checkpoint_file);
      if (!in) throw IoError("cannot read checkpoint '" + options.checkpoint_file->string() + "'");
      return ActiveLearner::restore(ds, cfg, in);
    }
    return ActiveLearner(ds, cfg);
  };
  ActiveLearner learner = make_learner();

  auto save = [&] {
    if (!options.checkpoint_file) return;
    const auto tmp = options.checkpoint_file->string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::trunc);
      if (!out) throw IoError("cannot write checkpoint '" + tmp + "'");
      learner.save_checkpoint(out);
    }
    std::filesystem::rename(tmp, *options.checkpoint_file);
  };

  while (!learner.done()) {
    const std::size_t before = learner.state().curve.points.size();
    try {
      learner.step(oracle);
    } catch (const OracleError& e) {
      save();
      throw LoopAborted(std::string("oracle failed: ") + e.what(), learner.state().curve);
    }
    if (learner.state().curve.points.size() != before) save();
  }
  save();

  RunResult result;
  result.curve = learner.state().curve;
  result.state = learner.state();
  result.final_accuracy = learner.test_accuracy().value_or(0.0);
  return result;
}

double baseline_supervised(const Dataset& ds, const TrainConfig& cfg) {
  std::vector<const Example*> training;
  for (const auto& ex : ds.seed_set) training.push_back(&ex);
  for (const auto& ex : ds.pool) {
    if (ex.relevant) training.push_back(&ex);
  }
  return train_and_score(ds, std::move(training), cfg);
}

double baseline_noisy_pool(const Dataset& ds, const TrainConfig& cfg) {
  std::vector<const Example*> training;
  for (const auto& ex : ds.seed_set) training.push_back(&ex);
  for (const auto& ex : ds.pool) training.push_back(&ex);
  return train_and_score(ds, std::move(training), cfg);
}

void write_curve(const LearningCurve& curve, std::ostream& out) {
  out << "iteration,labeled_size,accuracy\n";
  for (const auto& p : curve.points) {
    out << p.iteration << ',' << p.labeled_size << ',' << format_double(p.accuracy) << '\n';
  }
  if (!out) throw IoError("curve write failed");
}

void export_curve(const LearningCurve& curve, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_curve(curve, out);
}

LearningCurve read_curve(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || line != "iteration,labeled_size,accuracy") {
    throw ParseError("expected curve header", 1);
  }
  LearningCurve curve;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto a = line.find(',');
    const auto b = a == std::string::npos ? a : line.find(',', a + 1);
    if (b == std::string::npos) throw ParseError("expected 3 fields", line_no);
    curve.points.push_back({parse_count(line.substr(0, a), line_no),
                            parse_count(line.substr(a + 1, b - a - 1), line_no),
                            parse_double(line.substr(b + 1), line_no)});
  }
  return curve;
}

LearningCurve load_curve(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return read_curve(in);
}

}  // namespace alearn
