// Copyright 2026 The alearn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "alearn/classifier.hpp"

namespace alearn {

/// Independently trained models over bootstrap resamples of the labeled set.
struct Committee {
  std::vector<ModelParams> members;
  std::vector<std::uint64_t> member_rng_seeds;

  std::size_t size() const { return members.size(); }
  std::size_t num_classes() const { return members.empty() ? 0 : members.front().num_classes(); }
  std::size_t dimensionality() const {
    return members.empty() ? 0 : members.front().dimensionality();
  }

  /// C >= 2 and all members share m and d.
  void validate() const;

  bool operator==(const Committee&) const = default;
};

enum class DisagreementKind { VoteEntropy, ConsensusEntropy, MaxDisagreement };

struct DisagreementStrategy {
  DisagreementKind kind = DisagreementKind::VoteEntropy;
  /// Base for vote and consensus entropy. Max disagreement uses natural log.
  double log_base = 10.0;

  void validate() const;
};

/// `ve`, `ce` or `md`.
std::string_view to_string(DisagreementKind kind);

/// Bootstrap redraws allowed before a member falls back to the full set.
inline constexpr int kBootstrapRetries = 10;

/// Member i is trained on a same-size bootstrap resample drawn with seed
/// `base_seed + i`. Resamples missing a class of the labeled set are redrawn.
Committee train_committee(const Matrix& x, std::span<const int> y, std::size_t num_classes,
                          std::size_t size, const TrainConfig& cfg, std::uint64_t base_seed);

/// One posterior matrix per member.
std::vector<Matrix> member_posteriors(const Committee& committee, const Matrix& x);

/// Fraction of the C votes that fall on each of m classes.
std::vector<double> vote_distribution(std::span<const int> votes, std::size_t num_classes);

// Scores from precomputed member posteriors (n x m each).
std::vector<double> vote_entropy_from(std::span<const Matrix> posteriors, double log_base);
Matrix consensus_from(std::span<const Matrix> posteriors);
std::vector<double> consensus_entropy_from(std::span<const Matrix> posteriors, double log_base);
std::vector<double> max_disagreement_from(std::span<const Matrix> posteriors);

/// Floor applied to member probabilities inside the KL logarithm.
inline constexpr double kKlClamp = 1e-12;

/// KL(p || q) in nats with both arguments clamped below by kKlClamp inside the log.
double kl_divergence(std::span<const double> p, std::span<const double> q);

std::vector<double> vote_entropy_scores(const Committee& committee, const Matrix& x,
                                        double log_base);
PosteriorMatrix consensus_proba(const Committee& committee, const Matrix& x,
                                std::vector<InstanceId> ids = {});
std::vector<double> consensus_entropy_scores(const Committee& committee, const Matrix& x,
                                             double log_base);
std::vector<double> max_disagreement_scores(const Committee& committee, const Matrix& x);

std::vector<double> disagreement_scores(std::span<const Matrix> posteriors,
                                        const DisagreementStrategy& strategy);

/// Rows of the k instances with the largest disagreement, in selection order.
std::vector<std::size_t> select_by_committee_rows(const Committee& committee, const Matrix& x,
                                                  const DisagreementStrategy& strategy,
                                                  std::size_t k);

std::vector<InstanceId> select_by_committee(const Committee& committee,
                                            std::span<const InstanceId> pool_ids,
                                            const Matrix& pool_features,
                                            const DisagreementStrategy& strategy, std::size_t k);

/// Argmax of the consensus posterior, scored against `y`.
double committee_accuracy(const Committee& committee, const Matrix& x, std::span<const int> y);

/// "alc1 C", the member seeds, then C concatenated model checkpoints.
void save_committee(const Committee& committee, std::ostream& out);
Committee load_committee(std::istream& in);

}  // namespace alearn
