// Copyright 2026 The alearn Authors
// SPDX-License-Identifier: Apache-2.0

// Reference implementations used as test oracles. They are written
// independently of the library: plain loops, full sorts, no shared helpers.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "alearn/classifier.hpp"
#include "alearn/dataset.hpp"

namespace testing {

using Rows = std::vector<std::vector<double>>;

inline Rows random_posteriors(std::mt19937_64& rng, std::size_t n, std::size_t m) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::bernoulli_distribution zero(0.1);
  Rows rows(n, std::vector<double>(m));
  for (auto& row : rows) {
    double sum = 0.0;
    for (auto& v : row) {
      v = zero(rng) ? 0.0 : u(rng);
      sum += v;
    }
    if (sum == 0.0) {
      row[0] = 1.0;
      sum = 1.0;
    }
    for (auto& v : row) v /= sum;
  }
  return rows;
}

inline alearn::PosteriorMatrix to_posterior(const Rows& rows) {
  alearn::PosteriorMatrix pm;
  pm.values.resize(static_cast<Eigen::Index>(rows.size()),
                   static_cast<Eigen::Index>(rows.empty() ? 0 : rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      pm.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    pm.instance_ids.push_back("i" + std::to_string(i));
  }
  return pm;
}

inline Rows to_rows(const alearn::Matrix& m) {
  Rows rows(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
  }
  return rows;
}

inline double ref_lc(const std::vector<double>& p) {
  return 1.0 - *std::max_element(p.begin(), p.end());
}

inline double ref_margin(std::vector<double> p) {
  std::sort(p.begin(), p.end(), std::greater<>());
  return p[0] - p[1];
}

inline double ref_entropy(const std::vector<double>& p, double base) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v) / std::log(base);
  }
  return h;
}

inline int ref_argmax(const std::vector<double>& p) {
  int best = 0;
  for (std::size_t j = 1; j < p.size(); ++j) {
    if (p[j] > p[static_cast<std::size_t>(best)]) best = static_cast<int>(j);
  }
  return best;
}

inline std::vector<double> ref_mean(const std::vector<Rows>& members, std::size_t row) {
  std::vector<double> out(members[0][row].size(), 0.0);
  for (const auto& m : members) {
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += m[row][j];
  }
  for (auto& v : out) v /= static_cast<double>(members.size());
  return out;
}

inline double ref_vote_entropy(const std::vector<Rows>& members, std::size_t row, double base) {
  std::vector<double> counts(members[0][row].size(), 0.0);
  for (const auto& m : members) counts[static_cast<std::size_t>(ref_argmax(m[row]))] += 1.0;
  for (auto& c : counts) c /= static_cast<double>(members.size());
  return ref_entropy(counts, base);
}

inline double ref_kl(const std::vector<double>& p, const std::vector<double>& q) {
  double d = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (p[j] > 0.0) d += p[j] * std::log(std::max(p[j], 1e-12) / std::max(q[j], 1e-12));
  }
  return d;
}

inline double ref_max_disagreement(const std::vector<Rows>& members, std::size_t row) {
  const auto q = ref_mean(members, row);
  double best = 0.0;
  for (const auto& m : members) best = std::max(best, ref_kl(m[row], q));
  return best;
}

/// Exhaustive selection: full stable sort of (score, index) pairs.
inline std::vector<std::size_t> ref_select(const std::vector<double>& scores, std::size_t k,
                                           bool highest_first) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return highest_first ? scores[a] > scores[b] : scores[a] < scores[b];
  });
  idx.resize(k);
  return idx;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() /
             ("alearn_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Small, fast synthetic dataset for loop tests.
inline alearn::Dataset small_dataset(std::uint64_t seed, std::size_t irrelevant = 0) {
  alearn::SyntheticSpec spec;
  spec.num_classes = 3;
  spec.dimensionality = 2;
  spec.seed_per_class = 4;
  spec.pool_per_class = 20;
  spec.irrelevant_count = irrelevant;
  spec.test_per_class = 10;
  spec.rng_seed = seed;
  return alearn::generate_synthetic(spec);
}

}  // namespace testing
