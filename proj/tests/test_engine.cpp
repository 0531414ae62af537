// Copyright 2026 The alearn Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "alearn/engine.hpp"
#include "alearn/errors.hpp"
#include "test_support.hpp"

using namespace alearn;

namespace {

constexpr Strategy kAll[] = {Strategy::LeastConfidence, Strategy::MarginSampling,
                             Strategy::EntropySampling, Strategy::VoteEntropy,
                             Strategy::ConsensusEntropy, Strategy::MaxDisagreement,
                             Strategy::Random};

LoopConfig quick_config(Strategy s, std::size_t iterations = 30) {
  LoopConfig cfg;
  cfg.strategy = s;
  cfg.max_iterations = iterations;
  cfg.checkpoint_iterations = {1, iterations / 2, iterations};
  cfg.classifier_cfg.max_epochs = 60;
  cfg.rng_seed = 5;
  return cfg;
}

// Answers like the simulated oracle until `budget` queries, then fails.
class FailingAfter final : public Oracle {
 public:
  FailingAfter(const Dataset& ds, std::size_t budget) : inner_(ds), budget_(budget) {}
  OracleResponse query(const Example& ex) override {
    if (calls_++ >= budget_) throw OracleError("annotator went home");
    return inner_.query(ex);
  }

 private:
  SimulatedOracle inner_;
  std::size_t budget_;
  std::size_t calls_ = 0;
};

std::set<InstanceId> ids_of(const std::vector<Example>& xs) {
  std::set<InstanceId> out;
  for (const auto& ex : xs) out.insert(ex.id);
  return out;
}

}  // namespace

TEST_SUITE("engine") {
  TEST_CASE("strategy names") {
    for (auto s : kAll) CHECK(parse_strategy(to_string(s)) == s);
    CHECK(to_string(Strategy::MaxDisagreement) == "md");
    CHECK_THROWS_AS(parse_strategy("qbc"), ConfigError);
    CHECK(is_committee_strategy(Strategy::VoteEntropy));
    CHECK_FALSE(is_committee_strategy(Strategy::Random));
  }

  TEST_CASE("config validation") {
    LoopConfig cfg;
    cfg.validate();
    cfg.checkpoint_iterations = {1, 3000};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.checkpoint_iterations = {5, 2};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.checkpoint_iterations = {0};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = LoopConfig{};
    cfg.batch_size = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = LoopConfig{};
    cfg.strategy = Strategy::VoteEntropy;
    cfg.committee_size = 1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }

  TEST_CASE("simulated oracle") {
    const Dataset ds = testing::small_dataset(3, 10);
    SimulatedOracle oracle(ds);
    for (const auto& ex : ds.pool) {
      const auto r = oracle.query(ex);
      if (ex.relevant) {
        CHECK(r.is_label());
        CHECK(r.label == *ex.true_class);
      } else {
        CHECK_FALSE(r.is_label());
      }
    }
    Example stranger;
    stranger.id = "nobody";
    CHECK_THROWS_AS(oracle.query(stranger), NotFoundError);
  }

  TEST_CASE("exhaustive querying rejects exactly the irrelevant fraction") {
    const Dataset ds = testing::small_dataset(4, 18);
    LoopConfig cfg = quick_config(Strategy::Random, 1000);
    cfg.retrain_every = 1000;
    cfg.checkpoint_iterations = {1};
    SimulatedOracle oracle(ds);
    const auto result = run_loop(ds, cfg, oracle);
    CHECK(result.state.pool.empty());
    CHECK(result.state.iteration == ds.pool.size());
    CHECK(result.state.discarded.size() == 18);
    CHECK(static_cast<double>(result.state.discarded.size()) / static_cast<double>(ds.pool.size()) ==
          18.0 / 78.0);
  }

  TEST_CASE("conservation, growth and no repeat queries for every strategy") {
    const Dataset ds = testing::small_dataset(6, 12);
    const std::set<InstanceId> test_ids = ids_of(ds.test_set);
    for (auto s : kAll) {
      CAPTURE(to_string(s));
      ActiveLearner learner(ds, quick_config(s, 40));
      SimulatedOracle oracle(ds);
      const std::size_t total = ds.seed_set.size() + ds.pool.size();
      std::set<InstanceId> queried;
      std::size_t last_labeled = learner.state().labeled.size();
      while (!learner.done()) {
        const auto pool_before = learner.state().pool;
        const auto picks = learner.select();
        REQUIRE(picks.size() == 1);
        CHECK(std::find(pool_before.begin(), pool_before.end(), picks[0].id) != pool_before.end());
        CHECK(queried.insert(picks[0].id).second);
        const auto response = oracle.query(learner.pool_example(picks[0].id));
        learner.acquire(picks[0].id, response);
        learner.end_iteration();
        const LoopState& st = learner.state();
        CHECK(st.labeled.size() + st.pool.size() + st.discarded.size() == total);
        if (response.is_label()) {
          CHECK(st.labeled.size() == last_labeled + 1);
        } else {
          CHECK(st.labeled.size() == last_labeled);
        }
        last_labeled = st.labeled.size();
        std::set<InstanceId> labeled_ids;
        for (const auto& item : st.labeled) labeled_ids.insert(item.id);
        for (const auto& id : st.pool) CHECK(labeled_ids.count(id) == 0);
        for (const auto& id : test_ids) CHECK(labeled_ids.count(id) == 0);
      }
      CHECK(learner.state().iteration == 40);
      const auto& pts = learner.state().curve.points;
      REQUIRE(pts.size() == 3);
      CHECK(pts[0].iteration == 1);
      CHECK(pts[0].labeled_size == ds.seed_set.size());
      for (std::size_t i = 1; i < pts.size(); ++i) CHECK(pts[i].iteration > pts[i - 1].iteration);
      for (const auto& p : pts) {
        CHECK(p.accuracy >= 0.0);
        CHECK(p.accuracy <= 1.0);
      }
    }
  }

  TEST_CASE("runs are deterministic for every strategy") {
    const Dataset ds = testing::small_dataset(7, 9);
    for (auto s : kAll) {
      CAPTURE(to_string(s));
      SimulatedOracle a(ds), b(ds);
      const auto r1 = run_loop(ds, quick_config(s), a);
      const auto r2 = run_loop(ds, quick_config(s), b);
      CHECK(r1.curve == r2.curve);
      CHECK(state_hash(r1.state) == state_hash(r2.state));
      CHECK(r1.state.labeled == r2.state.labeled);
    }
  }

  TEST_CASE("random strategy depends on its seed") {
    const Dataset ds = testing::small_dataset(8);
    auto cfg = quick_config(Strategy::Random);
    SimulatedOracle a(ds), b(ds);
    const auto r1 = run_loop(ds, cfg, a);
    cfg.rng_seed = 6;
    const auto r2 = run_loop(ds, cfg, b);
    CHECK_FALSE(r1.state.labeled == r2.state.labeled);
  }

  TEST_CASE("one iteration over a one-item pool") {
    for (bool relevant : {true, false}) {
      Dataset ds = testing::small_dataset(9);
      ds.pool.resize(1);
      ds.pool[0].relevant = relevant;
      for (auto s : kAll) {
        LoopConfig cfg = quick_config(s, 1);
        cfg.checkpoint_iterations = {1};
        SimulatedOracle oracle(ds);
        const auto r = run_loop(ds, cfg, oracle);
        CHECK(r.state.labeled.size() == ds.seed_set.size() + (relevant ? 1 : 0));
        CHECK(r.state.iteration == 1);
        CHECK(r.curve.points.size() == 1);
      }
    }
  }

  TEST_CASE("eight checkpoints over a 2000-query budget") {
    SyntheticSpec spec;
    spec.num_classes = 8;
    spec.dimensionality = 4;
    spec.seed_per_class = 20;
    spec.pool_per_class = 250;
    spec.test_per_class = 10;
    const Dataset ds = generate_synthetic(spec);
    LoopConfig cfg;
    cfg.strategy = Strategy::LeastConfidence;
    cfg.classifier_cfg.max_epochs = 30;
    cfg.retrain_every = 250;
    SimulatedOracle oracle(ds);
    const auto r = run_loop(ds, cfg, oracle);
    std::vector<std::size_t> its;
    for (const auto& p : r.curve.points) its.push_back(p.iteration);
    CHECK(its == kDefaultCheckpoints);
    CHECK(r.curve.points[0].labeled_size == 160);
    CHECK(r.curve.points.back().labeled_size == 2160);
  }

  TEST_CASE("batch mode queries several instances per iteration") {
    const Dataset ds = testing::small_dataset(10);
    LoopConfig cfg = quick_config(Strategy::EntropySampling, 5);
    cfg.batch_size = 4;
    SimulatedOracle oracle(ds);
    const auto r = run_loop(ds, cfg, oracle);
    CHECK(r.state.iteration == 5);
    CHECK(r.state.labeled.size() == ds.seed_set.size() + 20);
  }

  TEST_CASE("the pool running out ends the run early") {
    const Dataset ds = testing::small_dataset(11);
    LoopConfig cfg = quick_config(Strategy::MarginSampling, 500);
    cfg.checkpoint_iterations = {1, 500};
    SimulatedOracle oracle(ds);
    const auto r = run_loop(ds, cfg, oracle);
    CHECK(r.state.iteration == ds.pool.size());
    CHECK(r.state.pool.empty());
    CHECK(r.curve.points.size() == 1);
  }

  TEST_CASE("invalid runs") {
    Dataset ds = testing::small_dataset(12);
    SimulatedOracle oracle(ds);
    Dataset no_pool = ds;
    no_pool.pool.clear();
    CHECK_THROWS_AS(run_loop(no_pool, quick_config(Strategy::LeastConfidence), oracle), ConfigError);
    Dataset no_test = ds;
    no_test.test_set.clear();
    CHECK_THROWS_AS(run_loop(no_test, quick_config(Strategy::LeastConfidence), oracle), ConfigError);
    Dataset one_class = ds;
    for (auto& ex : one_class.seed_set) ex.true_class = 0;
    CHECK_THROWS_AS(run_loop(one_class, quick_config(Strategy::LeastConfidence), oracle),
                    TrainingError);
    ActiveLearner learner(ds, quick_config(Strategy::LeastConfidence));
    CHECK_THROWS_AS(learner.acquire("not-in-pool", OracleResponse::make_label(0)), NotFoundError);
    CHECK_THROWS_AS(learner.acquire(ds.pool[0].id, OracleResponse::make_label(7)), ConfigError);
  }

  TEST_CASE("a failing oracle aborts with the partial curve") {
    const Dataset ds = testing::small_dataset(13);
    FailingAfter oracle(ds, 12);
    try {
      run_loop(ds, quick_config(Strategy::LeastConfidence, 30), oracle);
      FAIL("expected LoopAborted");
    } catch (const LoopAborted& e) {
      REQUIRE(e.partial_curve.points.size() == 1);
      CHECK(e.partial_curve.points[0].iteration == 1);
    }
  }

  TEST_CASE("transient oracle failures are retried") {
    const Dataset ds = testing::small_dataset(14);
    class Flaky final : public Oracle {
     public:
      explicit Flaky(const Dataset& ds) : inner_(ds) {}
      OracleResponse query(const Example& ex) override {
        if (++calls_ % 3 != 0) throw OracleError("busy");
        return inner_.query(ex);
      }

     private:
      SimulatedOracle inner_;
      int calls_ = 0;
    } flaky(ds);
    SimulatedOracle steady(ds);
    const auto a = run_loop(ds, quick_config(Strategy::EntropySampling, 10), flaky);
    const auto b = run_loop(ds, quick_config(Strategy::EntropySampling, 10), steady);
    CHECK(state_hash(a.state) == state_hash(b.state));
  }

  TEST_CASE("an interrupted run resumes to the same end state") {
    const Dataset ds = testing::small_dataset(15, 8);
    const auto dir = testing::temp_dir("engine_resume");
    for (auto s : {Strategy::LeastConfidence, Strategy::VoteEntropy, Strategy::Random}) {
      CAPTURE(to_string(s));
      LoopConfig cfg = quick_config(s, 30);
      cfg.checkpoint_iterations = {1, 5, 10, 15, 20, 25, 30};
      cfg.retrain_every = 3;
      SimulatedOracle clean(ds);
      const auto full = run_loop(ds, cfg, clean);

      RunOptions opts;
      opts.checkpoint_file = dir / ("ckpt_" + std::string(to_string(s)));
      FailingAfter failing(ds, 17);
      CHECK_THROWS_AS(run_loop(ds, cfg, failing, opts), LoopAborted);
      REQUIRE(std::filesystem::exists(*opts.checkpoint_file));
      opts.resume = true;
      SimulatedOracle rest(ds);
      const auto resumed = run_loop(ds, cfg, rest, opts);
      CHECK(resumed.curve == full.curve);
      CHECK(state_hash(resumed.state) == state_hash(full.state));
    }
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("checkpoint text round trips mid-run") {
    const Dataset ds = testing::small_dataset(16, 5);
    for (auto s : kAll) {
      CAPTURE(to_string(s));
      LoopConfig cfg = quick_config(s, 20);
      cfg.retrain_every = 4;
      ActiveLearner a(ds, cfg);
      SimulatedOracle oracle(ds);
      for (int i = 0; i < 7; ++i) a.step(oracle);
      std::stringstream ckpt;
      a.save_checkpoint(ckpt);
      ActiveLearner b = ActiveLearner::restore(ds, cfg, ckpt);
      CHECK(a.hash() == b.hash());
      while (!a.done()) a.step(oracle);
      while (!b.done()) b.step(oracle);
      CHECK(a.hash() == b.hash());
    }
    std::istringstream junk("not a checkpoint\n");
    CHECK_THROWS_AS(ActiveLearner::restore(ds, quick_config(Strategy::LeastConfidence), junk),
                    ParseError);
  }

  TEST_CASE("scripted transcript replays a simulated run") {
    const Dataset ds = testing::small_dataset(17, 6);
    const LoopConfig cfg = quick_config(Strategy::ConsensusEntropy, 25);
    ActiveLearner learner(ds, cfg);
    SimulatedOracle oracle(ds);
    std::vector<OracleResponse> transcript;
    while (!learner.done()) {
      const auto pick = learner.select().front();
      const auto r = oracle.query(learner.pool_example(pick.id));
      transcript.push_back(r);
      learner.acquire(pick.id, r);
      learner.end_iteration();
    }
    ScriptedOracle scripted(transcript);
    const auto replay = run_loop(ds, cfg, scripted);
    CHECK(state_hash(replay.state) == learner.hash());
    ScriptedOracle short_script({});
    CHECK_THROWS_AS(run_loop(ds, cfg, short_script), LoopAborted);
  }

  TEST_CASE("retraining cadence does not change the acquisition log at checkpoints") {
    const Dataset ds = testing::small_dataset(18);
    LoopConfig every = quick_config(Strategy::Random, 20);
    LoopConfig sparse = every;
    sparse.retrain_every = 7;
    SimulatedOracle a(ds), b(ds);
    const auto r1 = run_loop(ds, every, a);
    const auto r2 = run_loop(ds, sparse, b);
    // Random selection ignores the model, and checkpoints always retrain.
    CHECK(r1.state.labeled == r2.state.labeled);
    CHECK(r1.curve == r2.curve);
  }

  TEST_CASE("baselines") {
    SyntheticSpec spec;
    spec.num_classes = 3;
    spec.dimensionality = 2;
    spec.seed_per_class = 5;
    spec.pool_per_class = 40;
    spec.test_per_class = 30;
    spec.rng_seed = 19;
    TrainConfig tc;
    tc.max_epochs = 100;

    SUBCASE("empty pool equals the seed-only model") {
      Dataset ds = generate_synthetic(spec);
      ds.pool.clear();
      const Matrix x = feature_matrix(ds.seed_set);
      std::vector<int> y;
      for (const auto& ex : ds.seed_set) y.push_back(*ex.true_class);
      std::vector<int> ty;
      for (const auto& ex : ds.test_set) ty.push_back(*ex.true_class);
      const double seed_only = accuracy(train(x, y, 3, tc), feature_matrix(ds.test_set), ty);
      CHECK(baseline_supervised(ds, tc) == seed_only);
      CHECK(baseline_noisy_pool(ds, tc) == seed_only);
    }
    SUBCASE("no noise means identical baselines") {
      const Dataset ds = generate_synthetic(spec);
      CHECK(baseline_supervised(ds, tc) == baseline_noisy_pool(ds, tc));
    }
    SUBCASE("missing pool class") {
      Dataset ds = generate_synthetic(spec);
      ds.pool[3].true_class.reset();
      CHECK_THROWS_AS(baseline_noisy_pool(ds, tc), IntegrityError);
      CHECK_THROWS_AS(baseline_supervised(ds, tc), IntegrityError);
      // An irrelevant item needs no class for the supervised baseline.
      ds.pool[3].relevant = false;
      CHECK_NOTHROW(baseline_supervised(ds, tc));
      CHECK_THROWS_AS(baseline_noisy_pool(ds, tc), IntegrityError);
    }
    SUBCASE("all-noise pool is no better than the seed model by much") {
      double noisy = 0.0, seed_only = 0.0;
      for (std::uint64_t s = 0; s < 10; ++s) {
        SyntheticSpec all_noise = spec;
        all_noise.num_classes = 8;
        all_noise.pool_per_class = 0;
        all_noise.irrelevant_count = 400;
        all_noise.rng_seed = s;
        Dataset ds = generate_synthetic(all_noise);
        noisy += baseline_noisy_pool(ds, tc);
        ds.pool.clear();
        seed_only += baseline_supervised(ds, tc);
      }
      CHECK(noisy / 10 <= seed_only / 10 + 0.02);
    }
  }

  TEST_CASE("supervised baseline dominates active learning on clean data") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      SyntheticSpec spec;
      spec.num_classes = 3;
      spec.dimensionality = 2;
      spec.seed_per_class = 3;
      spec.pool_per_class = 30;
      spec.test_per_class = 40;
      spec.cluster_separation = 8.0;
      spec.rng_seed = seed;
      const Dataset ds = generate_synthetic(spec);
      LoopConfig cfg = quick_config(Strategy::LeastConfidence, 30);
      cfg.classifier_cfg = TrainConfig{};
      cfg.rng_seed = seed;
      const double reference = baseline_supervised(ds, cfg.classifier_cfg);
      SimulatedOracle oracle(ds);
      const auto r = run_loop(ds, cfg, oracle);
      for (const auto& p : r.curve.points) CHECK(reference >= p.accuracy);
    }
  }

  TEST_CASE("curve export") {
    const auto dir = testing::temp_dir("curve");
    export_curve(LearningCurve{}, dir / "empty.csv");
    std::ifstream empty(dir / "empty.csv");
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(empty, line)) lines.push_back(line);
    CHECK(lines == std::vector<std::string>{"iteration,labeled_size,accuracy"});

    LearningCurve curve;
    for (std::size_t i = 0; i < kDefaultCheckpoints.size(); ++i) {
      curve.points.push_back({kDefaultCheckpoints[i], 160 + kDefaultCheckpoints[i], 1.0 / (3.0 + static_cast<double>(i))});
    }
    export_curve(curve, dir / "eight.csv");
    std::ifstream eight(dir / "eight.csv");
    int count = 0;
    while (std::getline(eight, line)) ++count;
    CHECK(count == 9);
    CHECK(load_curve(dir / "eight.csv") == curve);
    std::istringstream bad("iteration,labeled_size,accuracy\n1,2\n");
    CHECK_THROWS_AS(read_curve(bad), ParseError);
    std::filesystem::remove_all(dir);
  }
}
