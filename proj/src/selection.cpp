// Copyright 2026 The alearn Authors
// SPDX-License-Identifier: Apache-2.0

#include "alearn/selection.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "alearn/errors.hpp"

namespace alearn {

std::vector<std::size_t> top_k(std::span<const double> scores, std::size_t k, Rank rank) {
  if (scores.empty()) throw ConfigError("cannot select from an empty pool");
  if (k > scores.size()) {
    throw ConfigError("requested " + std::to_string(k) + " instances from a pool of " +
                      std::to_string(scores.size()));
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto better = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) {
      return rank == Rank::HighestFirst ? scores[a] > scores[b] : scores[a] < scores[b];
    }
    return a < b;
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    better);
  order.resize(k);
  return order;
}

}  // namespace alearn
