// Copyright 2026 The alearn Authors
// SPDX-License-Identifier: Apache-2.0

#include "alearn/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "alearn/errors.hpp"
#include "alearn/selection.hpp"

namespace alearn {

namespace {

void require_rows(const PosteriorMatrix& p) {
  if (p.rows() == 0 || p.cols() == 0) throw ConfigError("empty posterior matrix");
}

void check_base(double base) {
  if (!(base > 0.0) || base == 1.0 || !std::isfinite(base)) {
    throw ConfigError("log base must be positive and different from 1");
  }
}

}  // namespace

void UncertaintyStrategy::validate() const { check_base(entropy_log_base); }

std::string_view to_string(UncertaintyKind kind) {
  switch (kind) {
    case UncertaintyKind::LeastConfidence: return "lc";
    case UncertaintyKind::MarginSampling: return "ms";
    case UncertaintyKind::EntropySampling: return "es";
  }
  return "?";
}

std::vector<double> lc_scores(const PosteriorMatrix& posteriors) {
  require_rows(posteriors);
  std::vector<double> out(posteriors.rows());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = 1.0 - posteriors.values.row(static_cast<Eigen::Index>(i)).maxCoeff();
  }
  return out;
}

std::vector<double> ms_scores(const PosteriorMatrix& posteriors) {
  require_rows(posteriors);
  if (posteriors.cols() < 2) throw ConfigError("margin sampling needs at least 2 classes");
  std::vector<double> out(posteriors.rows());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double first = -1.0, second = -1.0;
    for (Eigen::Index c = 0; c < posteriors.values.cols(); ++c) {
      const double v = posteriors.values(static_cast<Eigen::Index>(i), c);
      if (v > first) {
        second = first;
        first = v;
      } else if (v > second) {
        second = v;
      }
    }
    out[i] = first - second;
  }
  return out;
}

double entropy(std::span<const double> distribution, double log_base) {
  check_base(log_base);
  std::vector<double> p(distribution.begin(), distribution.end());
  std::sort(p.begin(), p.end(), std::greater<>());
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  // -0.0 for one-hot rows otherwise.
  return h / std::log(log_base) + 0.0;
}

std::vector<double> es_scores(const PosteriorMatrix& posteriors, double log_base) {
  check_base(log_base);
  require_rows(posteriors);
  std::vector<double> out(posteriors.rows());
  std::vector<double> row(posteriors.cols());
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      row[c] = posteriors.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
    }
    out[i] = entropy(row, log_base);
  }
  return out;
}

std::vector<double> uncertainty_scores(const PosteriorMatrix& posteriors,
                                       const UncertaintyStrategy& strategy) {
  switch (strategy.kind) {
    case UncertaintyKind::LeastConfidence: return lc_scores(posteriors);
    case UncertaintyKind::MarginSampling: return ms_scores(posteriors);
    case UncertaintyKind::EntropySampling:
      return es_scores(posteriors, strategy.entropy_log_base);
  }
  throw ConfigError("unknown uncertainty strategy");
}

std::vector<std::size_t> select_uncertain_rows(const PosteriorMatrix& posteriors,
                                               const UncertaintyStrategy& strategy,
                                               std::size_t k) {
  const auto scores = uncertainty_scores(posteriors, strategy);
  const Rank rank = strategy.kind == UncertaintyKind::MarginSampling ? Rank::LowestFirst
                                                                     : Rank::HighestFirst;
  return top_k(scores, k, rank);
}

std::vector<InstanceId> select_uncertain(const PosteriorMatrix& posteriors,
                                         const UncertaintyStrategy& strategy, std::size_t k) {
  if (posteriors.instance_ids.size() != posteriors.rows()) {
    throw ShapeError("posterior matrix has no ids aligned to its rows");
  }
  std::vector<InstanceId> ids;
  for (std::size_t r : select_uncertain_rows(posteriors, strategy, k)) {
    ids.push_back(posteriors.instance_ids[r]);
  }
  return ids;
}

}  // namespace alearn
