// Copyright 2026 The alearn Authors
// SPDX-License-Identifier: Apache-2.0

#include "alearn/committee.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <set>
#include <string>

#include "alearn/errors.hpp"
#include "alearn/selection.hpp"
#include "alearn/uncertainty.hpp"

namespace alearn {

namespace {

void check_base(double base) {
  if (!(base > 0.0) || base == 1.0 || !std::isfinite(base)) {
    throw ConfigError("log base must be positive and different from 1");
  }
}

void check_members(std::span<const Matrix> posteriors) {
  if (posteriors.empty()) throw ConfigError("committee has no members");
  const auto& first = posteriors.front();
  if (first.rows() == 0) throw ConfigError("no instances to score");
  for (const auto& p : posteriors) {
    if (p.rows() != first.rows() || p.cols() != first.cols()) {
      throw ShapeError("committee members disagree on posterior shape");
    }
  }
}

std::vector<double> row_of(const Matrix& m, Eigen::Index i) {
  std::vector<double> out(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index c = 0; c < m.cols(); ++c) out[static_cast<std::size_t>(c)] = m(i, c);
  return out;
}

}  // namespace

void Committee::validate() const {
  if (members.size() < 2) throw ConfigError("a committee needs at least 2 members");
  if (member_rng_seeds.size() != members.size()) {
    throw ShapeError("committee seed list does not match member count");
  }
  for (const auto& m : members) {
    if (m.num_classes() != num_classes() || m.dimensionality() != dimensionality()) {
      throw ShapeError("committee members disagree on classes or dimensionality");
    }
  }
}

void DisagreementStrategy::validate() const { check_base(log_base); }

std::string_view to_string(DisagreementKind kind) {
  switch (kind) {
    case DisagreementKind::VoteEntropy: return "ve";
    case DisagreementKind::ConsensusEntropy: return "ce";
    case DisagreementKind::MaxDisagreement: return "md";
  }
  return "?";
}

Committee train_committee(const Matrix& x, std::span<const int> y, std::size_t num_classes,
                          std::size_t size, const TrainConfig& cfg, std::uint64_t base_seed) {
  if (size < 2) throw ConfigError("a committee needs at least 2 members");
  if (static_cast<std::size_t>(x.rows()) != y.size()) {
    throw ShapeError("feature rows and labels differ");
  }
  const std::set<int> classes(y.begin(), y.end());
  const std::size_t n = y.size();

  Committee committee;
  for (std::size_t member = 0; member < size; ++member) {
    const std::uint64_t seed = base_seed + member;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, n == 0 ? 0 : n - 1);
    std::vector<std::size_t> rows;
    bool covered = false;
    for (int attempt = 0; attempt < kBootstrapRetries && n > 0 && !covered; ++attempt) {
      rows.resize(n);
      std::set<int> seen;
      for (auto& r : rows) {
        r = pick(rng);
        seen.insert(y[r]);
      }
      covered = seen.size() == classes.size();
    }

    TrainConfig member_cfg = cfg;
    member_cfg.rng_seed = seed;
    if (covered) {
      Matrix xs(static_cast<Eigen::Index>(n), x.cols());
      std::vector<int> ys(n);
      for (std::size_t i = 0; i < n; ++i) {
        xs.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
        ys[i] = y[rows[i]];
      }
      committee.members.push_back(train(xs, ys, num_classes, member_cfg));
    } else {
      committee.members.push_back(train(x, y, num_classes, member_cfg));
    }
    committee.member_rng_seeds.push_back(seed);
  }
  return committee;
}

std::vector<Matrix> member_posteriors(const Committee& committee, const Matrix& x) {
  committee.validate();
  std::vector<Matrix> out;
  out.reserve(committee.size());
  for (const auto& m : committee.members) out.push_back(predict_proba(m, x));
  return out;
}

std::vector<double> vote_distribution(std::span<const int> votes, std::size_t num_classes) {
  if (votes.empty()) throw ConfigError("no votes");
  std::vector<double> dist(num_classes, 0.0);
  for (int v : votes) {
    if (v < 0 || static_cast<std::size_t>(v) >= num_classes) {
      throw ShapeError("vote outside class range");
    }
    dist[static_cast<std::size_t>(v)] += 1.0;
  }
  for (double& d : dist) d /= static_cast<double>(votes.size());
  return dist;
}

std::vector<double> vote_entropy_from(std::span<const Matrix> posteriors, double log_base) {
  check_base(log_base);
  check_members(posteriors);
  const auto n = posteriors.front().rows();
  const auto m = static_cast<std::size_t>(posteriors.front().cols());
  std::vector<std::vector<int>> member_votes;
  for (const auto& p : posteriors) member_votes.push_back(argmax_rows(p));
  std::vector<double> out(static_cast<std::size_t>(n));
  std::vector<int> votes(posteriors.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t c = 0; c < votes.size(); ++c) votes[c] = member_votes[c][i];
    out[i] = entropy(vote_distribution(votes, m), log_base);
  }
  return out;
}

Matrix consensus_from(std::span<const Matrix> posteriors) {
  check_members(posteriors);
  // Mean as first member plus averaged deviations: identical members give the
  // member's posteriors back bit for bit.
  const Matrix& base = posteriors.front();
  Matrix deviation = Matrix::Zero(base.rows(), base.cols());
  for (std::size_t c = 1; c < posteriors.size(); ++c) deviation += posteriors[c] - base;
  return base + deviation / static_cast<double>(posteriors.size());
}

std::vector<double> consensus_entropy_from(std::span<const Matrix> posteriors, double log_base) {
  check_base(log_base);
  const Matrix consensus = consensus_from(posteriors);
  return es_scores(PosteriorMatrix{consensus, {}}, log_base);
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ShapeError("KL divergence of different-length distributions");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) kl += p[i] * (std::log(std::max(p[i], kKlClamp)) - std::log(std::max(q[i], kKlClamp)));
  }
  return std::max(kl, 0.0);
}

std::vector<double> max_disagreement_from(std::span<const Matrix> posteriors) {
  const Matrix consensus = consensus_from(posteriors);
  std::vector<double> out(static_cast<std::size_t>(consensus.rows()), 0.0);
  for (Eigen::Index i = 0; i < consensus.rows(); ++i) {
    const auto q = row_of(consensus, i);
    double worst = 0.0;
    for (const auto& member : posteriors) worst = std::max(worst, kl_divergence(row_of(member, i), q));
    out[static_cast<std::size_t>(i)] = worst;
  }
  return out;
}

std::vector<double> vote_entropy_scores(const Committee& committee, const Matrix& x,
                                        double log_base) {
  return vote_entropy_from(member_posteriors(committee, x), log_base);
}

PosteriorMatrix consensus_proba(const Committee& committee, const Matrix& x,
                                std::vector<InstanceId> ids) {
  if (!ids.empty() && ids.size() != static_cast<std::size_t>(x.rows())) {
    throw ShapeError("id count does not match feature rows");
  }
  return PosteriorMatrix{consensus_from(member_posteriors(committee, x)), std::move(ids)};
}

std::vector<double> consensus_entropy_scores(const Committee& committee, const Matrix& x,
                                             double log_base) {
  return consensus_entropy_from(member_posteriors(committee, x), log_base);
}

std::vector<double> max_disagreement_scores(const Committee& committee, const Matrix& x) {
  return max_disagreement_from(member_posteriors(committee, x));
}

std::vector<double> disagreement_scores(std::span<const Matrix> posteriors,
                                        const DisagreementStrategy& strategy) {
  switch (strategy.kind) {
    case DisagreementKind::VoteEntropy: return vote_entropy_from(posteriors, strategy.log_base);
    case DisagreementKind::ConsensusEntropy:
      return consensus_entropy_from(posteriors, strategy.log_base);
    case DisagreementKind::MaxDisagreement: return max_disagreement_from(posteriors);
  }
  throw ConfigError("unknown disagreement strategy");
}

std::vector<std::size_t> select_by_committee_rows(const Committee& committee, const Matrix& x,
                                                  const DisagreementStrategy& strategy,
                                                  std::size_t k) {
  strategy.validate();
  if (x.rows() == 0) throw ConfigError("cannot select from an empty pool");
  const auto scores = disagreement_scores(member_posteriors(committee, x), strategy);
  return top_k(scores, k, Rank::HighestFirst);
}

std::vector<InstanceId> select_by_committee(const Committee& committee,
                                            std::span<const InstanceId> pool_ids,
                                            const Matrix& pool_features,
                                            const DisagreementStrategy& strategy, std::size_t k) {
  if (pool_ids.size() != static_cast<std::size_t>(pool_features.rows())) {
    throw ShapeError("pool ids and features differ in length");
  }
  std::vector<InstanceId> out;
  for (std::size_t r : select_by_committee_rows(committee, pool_features, strategy, k)) {
    out.push_back(pool_ids[r]);
  }
  return out;
}

double committee_accuracy(const Committee& committee, const Matrix& x, std::span<const int> y) {
  if (y.empty()) throw ConfigError("accuracy needs a nonempty test set");
  return accuracy_from_proba(consensus_from(member_posteriors(committee, x)), y);
}

void save_committee(const Committee& committee, std::ostream& out) {
  committee.validate();
  out << "alc1 " << committee.size();
  for (auto s : committee.member_rng_seeds) out << ' ' << s;
  out << '\n';
  for (const auto& m : committee.members) save_model(m, out);
}

Committee load_committee(std::istream& in) {
  std::string tag;
  std::size_t size = 0;
  if (!(in >> tag >> size) || tag != "alc1") throw ParseError("expected 'alc1' committee header");
  Committee c;
  c.member_rng_seeds.resize(size);
  for (auto& s : c.member_rng_seeds) {
    if (!(in >> s)) throw ParseError("truncated committee seeds");
  }
  for (std::size_t i = 0; i < size; ++i) c.members.push_back(load_model(in));
  c.validate();
  return c;
}

}  // namespace alearn
