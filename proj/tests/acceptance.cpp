// Copyright 2026 The alearn Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite. Prints one PASS or FAIL line per criterion and exits
// nonzero when any criterion fails. Tolerances and experiment sizes are fixed
// here on purpose; change them only together with the decision log.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "alearn/annotation_service.hpp"
#include "alearn/classifier.hpp"
#include "alearn/committee.hpp"
#include "alearn/dataset.hpp"
#include "alearn/engine.hpp"
#include "alearn/uncertainty.hpp"
#include "test_support.hpp"

using namespace alearn;

namespace {

// Tolerances.
constexpr double kExactTol = 1e-12;        // values stated exactly, up to rounding
constexpr double kEntropyTol = 1e-3;       // entropies stated to three decimals
constexpr double kGradientRelTol = 1e-5;   // analytic vs central differences
constexpr double kRowSumTol = 1e-9;        // posterior rows sum to one
constexpr double kRandomSlack = 0.01;      // AL may trail the random control by this
constexpr double kBaselineGap = 0.05;      // supervised minus noisy pool, at least

// Runtime limits in seconds.
constexpr double kGoldenLimit = 1.0;
constexpr double kBruteForceLimit = 10.0;
constexpr double kExperimentLimit = 300.0;

// Brute-force oracle sizes.
constexpr int kBruteForceInstances = 120;
constexpr std::size_t kMaxPool = 50;
constexpr std::size_t kMaxClasses = 8;
constexpr std::size_t kMaxCommittee = 5;

// Desk-scale experiment.
constexpr std::size_t kClasses = 8;
constexpr std::size_t kDim = 2;
constexpr double kSeparation = 3.0;
constexpr std::size_t kSeedPerClass = 20;
constexpr std::size_t kPoolPerClass = 200;
constexpr std::size_t kIrrelevant = 686;  // 30% of the final pool
constexpr std::size_t kTestPerClass = 100;
constexpr std::size_t kBudget = 300;
const std::vector<std::size_t> kCheckpoints{1, 100, 200, 300};
constexpr std::size_t kEpochs = 200;
constexpr std::size_t kRetrainEvery = 10;
constexpr int kRngSeeds = 10;

const Strategy kActive[] = {Strategy::LeastConfidence, Strategy::MarginSampling,
                            Strategy::EntropySampling, Strategy::VoteEntropy,
                            Strategy::ConsensusEntropy, Strategy::MaxDisagreement};

int failures = 0;

void report(const std::string& name, bool pass, const std::string& detail) {
  std::printf("%s %s: %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Runs `body`, which returns an empty string on success or the first problem.
void criterion(const std::string& name, double limit_s, const std::function<std::string()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  std::string problem;
  try {
    problem = body();
  } catch (const std::exception& e) {
    problem = std::string("exception: ") + e.what();
  }
  const double elapsed = seconds_since(t0);
  if (problem.empty() && elapsed > limit_s) {
    problem = "took " + fmt("%.1f", elapsed) + " s, limit " + fmt("%.0f", limit_s) + " s";
  }
  report(name, problem.empty(), problem.empty() ? "ok in " + fmt("%.2f", elapsed) + " s" : problem);
}

UncertaintyStrategy uncertainty(UncertaintyKind kind) {
  UncertaintyStrategy s;
  s.kind = kind;
  return s;
}

DisagreementStrategy disagreement(DisagreementKind kind) {
  DisagreementStrategy s;
  s.kind = kind;
  return s;
}

std::string golden_uncertainty() {
  const auto pm = testing::to_posterior({{0.9, 0.09, 0.01}, {0.2, 0.5, 0.3}});
  for (auto kind : {UncertaintyKind::LeastConfidence, UncertaintyKind::MarginSampling,
                    UncertaintyKind::EntropySampling}) {
    if (select_uncertain(pm, uncertainty(kind), 1) != std::vector<InstanceId>{"i1"}) {
      return std::string(to_string(kind)) + " did not select D2";
    }
  }
  const auto ms = ms_scores(pm);
  if (std::abs(ms[0] - 0.81) > kExactTol || std::abs(ms[1] - 0.2) > kExactTol) {
    return "margins " + fmt("%.17g", ms[0]) + ", " + fmt("%.17g", ms[1]);
  }
  const auto es = es_scores(pm, 10.0);
  if (std::abs(es[0] - 0.155) > kEntropyTol || std::abs(es[1] - 0.447) > kEntropyTol) {
    return "entropies " + fmt("%.4f", es[0]) + ", " + fmt("%.4f", es[1]);
  }
  return {};
}

std::string golden_votes() {
  const std::vector<int> votes{0, 1, 0};
  const auto dist = vote_distribution(votes, 3);
  if (dist != std::vector<double>{2.0 / 3.0, 1.0 / 3.0, 0.0}) return "vote distribution differs";
  return {};
}

std::string brute_force_selection() {
  std::mt19937_64 rng(2026);
  std::uniform_int_distribution<std::size_t> pool_size(1, kMaxPool);
  std::uniform_int_distribution<std::size_t> classes(2, kMaxClasses);
  std::uniform_int_distribution<std::size_t> members(2, kMaxCommittee);
  std::normal_distribution<double> g(0.0, 1.5);
  for (int trial = 0; trial < kBruteForceInstances; ++trial) {
    const std::size_t n = pool_size(rng), m = classes(rng), c = members(rng), d = 3;
    const std::size_t k = 1 + static_cast<std::size_t>(trial) % n;
    const std::string where = "instance " + std::to_string(trial) + " (n=" + std::to_string(n) +
                              " m=" + std::to_string(m) + " C=" + std::to_string(c) + ")";

    // Uncertainty strategies on raw posteriors.
    const auto rows = testing::random_posteriors(rng, n, m);
    const auto pm = testing::to_posterior(rows);
    std::vector<double> lc, ms, es;
    for (const auto& r : rows) {
      lc.push_back(testing::ref_lc(r));
      ms.push_back(testing::ref_margin(r));
      es.push_back(testing::ref_entropy(r, 10.0));
    }
    if (select_uncertain_rows(pm, uncertainty(UncertaintyKind::LeastConfidence), k) !=
        testing::ref_select(lc, k, true)) {
      return "lc differs on " + where;
    }
    if (select_uncertain_rows(pm, uncertainty(UncertaintyKind::MarginSampling), k) !=
        testing::ref_select(ms, k, false)) {
      return "ms differs on " + where;
    }
    if (select_uncertain_rows(pm, uncertainty(UncertaintyKind::EntropySampling), k) !=
        testing::ref_select(es, k, true)) {
      return "es differs on " + where;
    }

    // Committee strategies on random linear members.
    Committee committee;
    for (std::size_t i = 0; i < c; ++i) {
      ModelParams p = ModelParams::zeros(m, d);
      for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = 0; b < d; ++b) p.weights(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = g(rng);
        p.biases(static_cast<Eigen::Index>(a)) = g(rng);
      }
      committee.members.push_back(p);
      committee.member_rng_seeds.push_back(i);
    }
    Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = g(rng);
    }
    std::vector<testing::Rows> ref;
    for (const auto& mp : member_posteriors(committee, x)) ref.push_back(testing::to_rows(mp));
    std::vector<double> ve, ce, md;
    for (std::size_t i = 0; i < n; ++i) {
      ve.push_back(testing::ref_vote_entropy(ref, i, 10.0));
      ce.push_back(testing::ref_entropy(testing::ref_mean(ref, i), 10.0));
      md.push_back(testing::ref_max_disagreement(ref, i));
    }
    if (select_by_committee_rows(committee, x, disagreement(DisagreementKind::VoteEntropy), k) !=
        testing::ref_select(ve, k, true)) {
      return "ve differs on " + where;
    }
    if (select_by_committee_rows(committee, x, disagreement(DisagreementKind::ConsensusEntropy), k) !=
        testing::ref_select(ce, k, true)) {
      return "ce differs on " + where;
    }
    if (select_by_committee_rows(committee, x, disagreement(DisagreementKind::MaxDisagreement), k) !=
        testing::ref_select(md, k, true)) {
      return "md differs on " + where;
    }
  }
  return {};
}

Matrix gaussian(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix out(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) out(i, j) = n(rng);
  }
  return out;
}

std::vector<int> labels(std::mt19937_64& rng, std::size_t n, int m) {
  std::uniform_int_distribution<int> pick(0, m - 1);
  std::vector<int> y(n);
  for (auto& v : y) v = pick(rng);
  return y;
}

std::string classifier_numerics() {
  std::mt19937_64 rng(7);
  const double h = 1e-5;
  double worst_gradient = 0.0;
  for (int point = 0; point < 10; ++point) {
    const Eigen::Index m = 2 + point % 7, d = 1 + point % 4, n = 20;
    const Matrix x = gaussian(rng, n, d, 1.0);
    const auto y = labels(rng, static_cast<std::size_t>(n), static_cast<int>(m));
    ModelParams p;
    p.weights = gaussian(rng, m, d, 1.0);
    p.biases = gaussian(rng, m, 1, 1.0).col(0);
    ModelParams grad;
    softmax_gradient(p, x, y, 1e-2, grad);
    double num2 = 0.0, diff2 = 0.0;
    auto probe = [&](double& slot, double analytic) {
      const double saved = slot;
      slot = saved + h;
      const double up = softmax_loss(p, x, y, 1e-2);
      slot = saved - h;
      const double down = softmax_loss(p, x, y, 1e-2);
      slot = saved;
      const double numeric = (up - down) / (2 * h);
      num2 += numeric * numeric;
      diff2 += (numeric - analytic) * (numeric - analytic);
    };
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) probe(p.weights(i, j), grad.weights(i, j));
      probe(p.biases(i), grad.biases(i));
    }
    worst_gradient = std::max(worst_gradient, std::sqrt(diff2 / num2));
  }
  if (worst_gradient >= kGradientRelTol) return "gradient relative error " + fmt("%.3g", worst_gradient);

  double worst_sum = 0.0;
  for (double scale : {1.0, 50.0, 500.0}) {
    ModelParams p;
    p.weights = gaussian(rng, 8, 5, scale);
    p.biases = gaussian(rng, 8, 1, scale).col(0);
    const Matrix proba = predict_proba(p, gaussian(rng, 300, 5, 1.0));
    for (Eigen::Index i = 0; i < proba.rows(); ++i) {
      if (!proba.row(i).allFinite() || proba.row(i).minCoeff() < 0.0) return "invalid posterior row";
      worst_sum = std::max(worst_sum, std::abs(proba.row(i).sum() - 1.0));
    }
  }
  if (worst_sum > kRowSumTol) return "row sum off by " + fmt("%.3g", worst_sum);

  for (double lr : {0.1, 1.0, 10.0}) {
    const Matrix x = gaussian(rng, 100, 4, 2.0);
    const auto y = labels(rng, 100, 5);
    TrainConfig cfg;
    cfg.learning_rate = lr;
    std::vector<double> trace;
    train(x, y, 5, cfg, &trace);
    for (std::size_t i = 1; i < trace.size(); ++i) {
      if (trace[i] > trace[i - 1]) return "loss rose at epoch " + std::to_string(i) + " with lr " + fmt("%g", lr);
    }
  }
  return {};
}

std::string binary_collapse() {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const auto pm = testing::to_posterior(testing::random_posteriors(rng, 1 + trial % 40, 2));
    const auto lc = select_uncertain_rows(pm, uncertainty(UncertaintyKind::LeastConfidence), 1);
    if (select_uncertain_rows(pm, uncertainty(UncertaintyKind::MarginSampling), 1) != lc ||
        select_uncertain_rows(pm, uncertainty(UncertaintyKind::EntropySampling), 1) != lc) {
      return "strategies disagree on trial " + std::to_string(trial);
    }
  }
  return {};
}

// Conservation and bookkeeping invariants of one finished simulated run.
std::string check_run(const Dataset& ds, const LoopConfig& cfg, const RunResult& r) {
  const LoopState& st = r.state;
  std::map<InstanceId, const Example*> pool_by_id;
  for (const auto& e : ds.pool) pool_by_id[e.id] = &e;
  std::set<InstanceId> seen;
  for (const auto& item : st.labeled) {
    if (!seen.insert(item.id).second) return "duplicate labeled id " + item.id;
  }
  for (const auto& e : ds.seed_set) {
    if (!seen.count(e.id)) return "seed item missing from labeled set";
  }
  for (const auto& id : st.pool) {
    if (!seen.insert(id).second) return "pool id also labeled " + id;
  }
  for (const auto& id : st.discarded) {
    if (!seen.insert(id).second) return "discarded id seen twice " + id;
    if (pool_by_id.at(id)->relevant) return "relevant item discarded " + id;
  }
  if (seen.size() != ds.seed_set.size() + ds.pool.size()) return "items not conserved";
  for (const auto& e : ds.test_set) {
    if (seen.count(e.id)) return "test item entered the loop";
  }
  for (const auto& item : st.labeled) {
    const auto it = pool_by_id.find(item.id);
    if (it == pool_by_id.end()) continue;
    if (!it->second->relevant || item.label != *it->second->true_class) return "wrong label for " + item.id;
  }
  const std::size_t acquired = st.labeled.size() - ds.seed_set.size() + st.discarded.size();
  if (st.iteration != cfg.max_iterations || acquired != st.iteration) return "iteration count off";
  const auto& pts = r.curve.points;
  if (pts.size() != cfg.checkpoint_iterations.size()) return "curve length off";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (pts[i].iteration != cfg.checkpoint_iterations[i]) return "curve iteration off";
    if (pts[i].accuracy < 0.0 || pts[i].accuracy > 1.0) return "accuracy out of range";
    if (i > 0 && pts[i].labeled_size < pts[i - 1].labeled_size) return "labeled size shrank";
  }
  if (pts.front().labeled_size != ds.seed_set.size()) return "first point is not seed-only";
  if (r.final_accuracy != pts.back().accuracy) return "final accuracy differs from the curve";
  return {};
}

struct SweepResult {
  std::map<Strategy, std::vector<double>> first, last;
  std::vector<double> supervised, noisy;
  std::string invariant_problem;
  std::size_t runs = 0;
  double rerun_seconds = 0.0;  // determinism reruns, not part of the experiment
};

SweepResult run_sweep() {
  SweepResult out;
  for (int seed = 0; seed < kRngSeeds; ++seed) {
    SyntheticSpec spec;
    spec.num_classes = kClasses;
    spec.dimensionality = kDim;
    spec.cluster_separation = kSeparation;
    spec.seed_per_class = kSeedPerClass;
    spec.pool_per_class = kPoolPerClass;
    spec.irrelevant_count = kIrrelevant;
    spec.test_per_class = kTestPerClass;
    spec.rng_seed = static_cast<std::uint64_t>(seed);
    const Dataset ds = generate_synthetic(spec);
    TrainConfig tc;
    tc.max_epochs = kEpochs;
    out.supervised.push_back(baseline_supervised(ds, tc));
    out.noisy.push_back(baseline_noisy_pool(ds, tc));
    std::vector<Strategy> all(std::begin(kActive), std::end(kActive));
    all.push_back(Strategy::Random);
    for (Strategy s : all) {
      LoopConfig cfg;
      cfg.strategy = s;
      cfg.max_iterations = kBudget;
      cfg.checkpoint_iterations = kCheckpoints;
      cfg.classifier_cfg = tc;
      cfg.retrain_every = kRetrainEvery;
      cfg.rng_seed = static_cast<std::uint64_t>(seed);
      SimulatedOracle oracle(ds);
      const RunResult r = run_loop(ds, cfg, oracle);
      const auto rerun_start = std::chrono::steady_clock::now();
      SimulatedOracle again(ds);
      const RunResult twin = run_loop(ds, cfg, again);
      out.rerun_seconds += seconds_since(rerun_start);
      ++out.runs;
      if (out.invariant_problem.empty()) {
        std::string problem = check_run(ds, cfg, r);
        if (problem.empty() && state_hash(twin.state) != state_hash(r.state)) {
          problem = "rerun hash differs";
        }
        if (!problem.empty()) {
          out.invariant_problem = std::string(to_string(s)) + " seed " + std::to_string(seed) + ": " + problem;
        }
      }
      out.first[s].push_back(r.curve.points.front().accuracy);
      out.last[s].push_back(r.curve.points.back().accuracy);
    }
    std::fprintf(stderr, "seed %d done\n", seed);
  }
  return out;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::string transcript_replay() {
  auto ds = std::make_shared<const Dataset>(testing::small_dataset(31, 12));
  std::mt19937_64 rng(5);
  std::bernoulli_distribution wrong(0.2);
  std::uniform_int_distribution<int> any(0, static_cast<int>(ds->num_classes) - 1);
  std::map<InstanceId, const Example*> by_id;
  for (const auto& e : ds->pool) by_id[e.id] = &e;
  for (Strategy s : {Strategy::LeastConfidence, Strategy::MarginSampling, Strategy::EntropySampling,
                     Strategy::VoteEntropy, Strategy::ConsensusEntropy, Strategy::MaxDisagreement,
                     Strategy::Random}) {
    LoopConfig cfg;
    cfg.strategy = s;
    cfg.max_iterations = 30;
    cfg.checkpoint_iterations = {1, 15, 30};
    cfg.classifier_cfg.max_epochs = 60;
    cfg.retrain_every = 4;
    cfg.rng_seed = 9;
    AnnotationService svc(ds, cfg);
    for (std::size_t i = 0; i < cfg.max_iterations; ++i) {
      const PendingQuery q = svc.next_query();
      const Example& e = *by_id.at(q.instance_id);
      LabelSubmission sub;
      sub.query_id = q.query_id;
      if (e.relevant) sub.label = wrong(rng) ? any(rng) : *e.true_class;
      svc.submit(sub);
    }
    ScriptedOracle replay(svc.transcript());
    const RunResult r = run_loop(*ds, cfg, replay);
    if (state_hash(r.state) != svc.state_hash()) {
      return std::string(to_string(s)) + ": replayed hash differs";
    }
  }
  return {};
}

}  // namespace

int main() {
  criterion("golden uncertainty example", kGoldenLimit, golden_uncertainty);
  criterion("golden vote distribution", kGoldenLimit, golden_votes);
  criterion("brute-force selection oracles", kBruteForceLimit, brute_force_selection);
  criterion("classifier numerics", kBruteForceLimit, classifier_numerics);
  criterion("binary collapse", kBruteForceLimit, binary_collapse);

  const auto t0 = std::chrono::steady_clock::now();
  SweepResult sweep;
  std::string sweep_error;
  try {
    sweep = run_sweep();
  } catch (const std::exception& e) {
    sweep_error = std::string("exception: ") + e.what();
  }
  const double sweep_s = seconds_since(t0) - sweep.rerun_seconds;
  if (!sweep_error.empty()) {
    report("desk-scale experiment", false, sweep_error);
    report("engine invariants and replay", false, sweep_error);
  } else {
    std::ostringstream detail;
    std::string problem;
    for (const auto& [s, last] : sweep.last) {
      const double a = mean(sweep.first.at(s)), b = mean(last);
      detail << to_string(s) << ' ' << fmt("%.3f", a) << "->" << fmt("%.3f", b) << ' ';
      if (b < a && problem.empty()) problem = "(a) " + std::string(to_string(s)) + " curve fell";
    }
    const double random_final = mean(sweep.last.at(Strategy::Random));
    const double sup = mean(sweep.supervised), noisy = mean(sweep.noisy);
    for (Strategy s : kActive) {
      const double final_acc = mean(sweep.last.at(s));
      if (final_acc < random_final - kRandomSlack && problem.empty()) {
        problem = "(b) " + std::string(to_string(s)) + " trails random";
      }
      if (final_acc <= noisy && problem.empty()) {
        problem = "(d) " + std::string(to_string(s)) + " not above the noisy baseline";
      }
    }
    if (sup - noisy < kBaselineGap && problem.empty()) problem = "(c) baseline gap too small";
    if (sweep_s > kExperimentLimit && problem.empty()) problem = "took " + fmt("%.0f", sweep_s) + " s";
    detail << "supervised " << fmt("%.3f", sup) << " noisy " << fmt("%.3f", noisy) << " in "
           << fmt("%.0f", sweep_s) << " s";
    report("desk-scale experiment", problem.empty(),
           problem.empty() ? detail.str() : problem + "; " + detail.str());

    std::string engine = sweep.invariant_problem;
    if (engine.empty()) {
      try {
        engine = transcript_replay();
      } catch (const std::exception& e) {
        engine = std::string("exception: ") + e.what();
      }
    }
    report("engine invariants and replay", engine.empty(),
           engine.empty() ? std::to_string(sweep.runs) + " sweep runs conserved and deterministic; 7 transcripts replayed"
                          : engine);
  }
  return failures == 0 ? 0 : 1;
}
