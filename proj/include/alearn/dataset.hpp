// Copyright 2026 The alearn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace alearn {

using InstanceId = std::string;

/// One feature vector with its (optional) ground truth.
///
/// Irrelevant pool items keep the noisy class they were collected under in
/// `true_class`; the simulated oracle rejects them regardless.
struct Example {
  InstanceId id;
  std::vector<double> features;
  std::optional<int> true_class;
  bool relevant = true;
  std::optional<std::string> source_tag;

  bool operator==(const Example&) const = default;
};

enum class Partition { Seed, Pool, Test };

std::string_view to_string(Partition p);
Partition parse_partition(std::string_view text);

/// Seed set, unlabeled pool and held-out test set over a common feature space.
struct Dataset {
  std::size_t dimensionality = 0;
  std::size_t num_classes = 0;
  std::vector<std::string> class_names;
  std::vector<Example> seed_set;
  std::vector<Example> pool;
  std::vector<Example> test_set;

  /// Throws ShapeError / IntegrityError when an invariant is violated.
  void validate() const;

  std::size_t size() const { return seed_set.size() + pool.size() + test_set.size(); }

  bool operator==(const Dataset&) const = default;
};

/// Parameters of the Gaussian-cluster generator.
struct SyntheticSpec {
  std::size_t num_classes = 8;
  std::size_t dimensionality = 16;
  std::size_t seed_per_class = 20;
  std::size_t pool_per_class = 200;
  std::size_t irrelevant_count = 0;
  std::size_t test_per_class = 50;
  double cluster_separation = 3.0;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

/// Column mapping used when reading CSV files.
///
/// `class_names` fixes the class order; when empty, the sorted set of class
/// names found in the file is used. `partitions` assigns rows by id when the
/// file has no `partition` column; when both exist the listing wins.
struct CsvSchema {
  std::vector<std::string> class_names;
  std::map<InstanceId, Partition> partitions;
};

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});
Dataset read_csv(std::istream& in, const CsvSchema& schema = {});

/// Writes `id,partition,class,relevant,f0..f{d-1}` (plus a trailing `source`
/// column when any example carries a source tag). Features use 9 significant
/// digits.
void write_csv(const Dataset& ds, const std::filesystem::path& path);
void write_csv(const Dataset& ds, std::ostream& out);

Dataset generate_synthetic(const SyntheticSpec& spec);

/// Equality with a relative tolerance on feature values.
bool approx_equal(const Dataset& a, const Dataset& b, double rel_tol = 1e-8);

}  // namespace alearn
