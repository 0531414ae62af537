// Copyright 2026 The alearn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace alearn {

enum class Rank { HighestFirst, LowestFirst };

/// Positions of the `k` best scores in selection order. Equal scores keep
/// their input order. Throws ConfigError when `scores` is empty or k > size.
std::vector<std::size_t> top_k(std::span<const double> scores, std::size_t k, Rank rank);

}  // namespace alearn
