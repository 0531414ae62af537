// Copyright 2026 The alearn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "alearn/classifier.hpp"

namespace alearn {

enum class UncertaintyKind { LeastConfidence, MarginSampling, EntropySampling };

struct UncertaintyStrategy {
  UncertaintyKind kind = UncertaintyKind::LeastConfidence;
  /// Only used by entropy sampling. Base 10 reproduces the textbook worked
  /// example; selection does not depend on it.
  double entropy_log_base = 10.0;

  void validate() const;
};

/// `lc`, `ms` or `es`.
std::string_view to_string(UncertaintyKind kind);

/// 1 - max_y p(y|x) per row.
std::vector<double> lc_scores(const PosteriorMatrix& posteriors);

/// Gap between the two largest entries per row. Needs at least 2 columns.
std::vector<double> ms_scores(const PosteriorMatrix& posteriors);

/// Shannon entropy per row in the given base, with 0 log 0 = 0.
std::vector<double> es_scores(const PosteriorMatrix& posteriors, double log_base);

/// Entropy of a single distribution; terms are summed in descending order of
/// probability so permuted rows give bit-identical results.
double entropy(std::span<const double> distribution, double log_base);

/// Scores under `strategy`, oriented so that larger means "query first"
/// except for margin sampling, where smaller wins.
std::vector<double> uncertainty_scores(const PosteriorMatrix& posteriors,
                                       const UncertaintyStrategy& strategy);

/// Positions (rows) of the k most uncertain instances, in selection order.
std::vector<std::size_t> select_uncertain_rows(const PosteriorMatrix& posteriors,
                                               const UncertaintyStrategy& strategy,
                                               std::size_t k);

/// Ids of the k most uncertain instances, in selection order.
std::vector<InstanceId> select_uncertain(const PosteriorMatrix& posteriors,
                                         const UncertaintyStrategy& strategy, std::size_t k);

}  // namespace alearn
