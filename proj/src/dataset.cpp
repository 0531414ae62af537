// Copyright 2026 The alearn Authors
// SPDX-License-Identifier: Apache-2.0

#include "alearn/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "alearn/errors.hpp"

namespace alearn {

namespace {

constexpr int kFeatureDigits = 9;

// Splits one CSV record. Fields may be wrapped in double quotes, with ""
// standing for a literal quote.
std::vector<std::string> split_record(std::string_view line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  bool field_was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"' && current.empty() && !field_was_quoted) {
      quoted = true;
      field_was_quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
      field_was_quoted = false;
    } else {
      current.push_back(c);
    }
  }
  if (quoted) throw ParseError("unterminated quoted field", line_no);
  fields.push_back(std::move(current));
  return fields;
}

std::string quote_if_needed(std::string_view field) {
  if (field.find_first_of(",\"\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

double parse_feature(const std::string& text, std::size_t line_no, std::size_t column) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (text.empty() || ec != std::errc() || ptr != last) {
    throw ParseError("feature f" + std::to_string(column) + " is not numeric: '" + text + "'",
                     line_no);
  }
  if (!std::isfinite(value)) {
    throw ParseError("feature f" + std::to_string(column) + " is not finite: '" + text + "'",
                     line_no);
  }
  return value;
}

void format_feature(std::string& out, double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general,
                           kFeatureDigits);
  out.append(buf, res.ptr);
}

struct Header {
  std::size_t id = 0;
  std::optional<std::size_t> partition;
  std::optional<std::size_t> cls;
  std::optional<std::size_t> relevant;
  std::optional<std::size_t> source;
  std::vector<std::size_t> features;  // column of f0, f1, ...
  std::size_t arity = 0;
};

Header parse_header(const std::vector<std::string>& cols) {
  Header h;
  h.arity = cols.size();
  std::optional<std::size_t> id;
  std::map<std::size_t, std::size_t> feature_cols;
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const std::string& name = cols[c];
    auto claim = [&](std::optional<std::size_t>& slot) {
      if (slot) throw ParseError("duplicate column '" + name + "'", 1);
      slot = c;
    };
    if (name == "id") {
      claim(id);
    } else if (name == "partition") {
      claim(h.partition);
    } else if (name == "class") {
      claim(h.cls);
    } else if (name == "relevant") {
      claim(h.relevant);
    } else if (name == "source") {
      claim(h.source);
    } else if (name.size() > 1 && name[0] == 'f' &&
               std::all_of(name.begin() + 1, name.end(),
                           [](char ch) { return ch >= '0' && ch <= '9'; })) {
      std::size_t k = std::stoul(name.substr(1));
      if (!feature_cols.emplace(k, c).second) {
        throw ParseError("duplicate column '" + name + "'", 1);
      }
    } else {
      throw ParseError("unknown column '" + name + "'", 1);
    }
  }
  if (!id) throw ParseError("missing 'id' column", 1);
  h.id = *id;
  if (feature_cols.empty()) throw ParseError("no feature columns", 1);
  std::size_t expect = 0;
  for (const auto& [k, c] : feature_cols) {
    if (k != expect) throw ParseError("feature columns must be f0..f{d-1}", 1);
    h.features.push_back(c);
    ++expect;
  }
  return h;
}

struct RawRow {
  std::size_t line;
  Example example;
  std::optional<std::string> class_name;
  std::optional<Partition> partition;
};

}  // namespace

std::string_view to_string(Partition p) {
  switch (p) {
    case Partition::Seed: return "seed";
    case Partition::Pool: return "pool";
    case Partition::Test: return "test";
  }
  return "?";
}

Partition parse_partition(std::string_view text) {
  if (text == "seed") return Partition::Seed;
  if (text == "pool") return Partition::Pool;
  if (text == "test") return Partition::Test;
  throw ParseError("unknown partition '" + std::string(text) + "'");
}

void Dataset::validate() const {
  if (dimensionality == 0) throw ShapeError("dimensionality must be positive");
  if (num_classes == 0) throw ShapeError("num_classes must be positive");
  if (class_names.size() != num_classes) {
    throw ShapeError("class_names has " + std::to_string(class_names.size()) +
                     " entries, expected " + std::to_string(num_classes));
  }
  std::unordered_set<std::string_view> ids;
  ids.reserve(size());
  auto check = [&](const std::vector<Example>& part, Partition p) {
    for (const Example& ex : part) {
      if (!ids.insert(ex.id).second) throw IntegrityError("duplicate id '" + ex.id + "'");
      if (ex.features.size() != dimensionality) {
        throw ShapeError("example '" + ex.id + "' has " + std::to_string(ex.features.size()) +
                         " features, expected " + std::to_string(dimensionality));
      }
      for (double v : ex.features) {
        if (!std::isfinite(v)) throw IntegrityError("example '" + ex.id + "' has a non-finite feature");
      }
      if (ex.true_class &&
          (*ex.true_class < 0 || static_cast<std::size_t>(*ex.true_class) >= num_classes)) {
        throw IntegrityError("example '" + ex.id + "' has class index out of range");
      }
      if (p != Partition::Pool && !ex.true_class) {
        throw IntegrityError("example '" + ex.id + "' in " + std::string(to_string(p)) +
                             " partition has no class");
      }
      if (p == Partition::Test && !ex.relevant) {
        throw IntegrityError("test example '" + ex.id + "' is marked irrelevant");
      }
    }
  };
  check(seed_set, Partition::Seed);
  check(pool, Partition::Pool);
  check(test_set, Partition::Test);
}

void SyntheticSpec::validate() const {
  if (num_classes < 2) throw ConfigError("synthetic spec needs at least 2 classes");
  if (dimensionality == 0) throw ConfigError("synthetic spec needs a positive dimensionality");
  if (!(cluster_separation > 0.0) || !std::isfinite(cluster_separation)) {
    throw ConfigError("cluster_separation must be positive");
  }
}

Dataset read_csv(std::istream& in, const CsvSchema& schema) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError("empty file", 1);
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const Header header = parse_header(split_record(line, line_no));
  if (!header.partition && schema.partitions.empty()) {
    throw ParseError("no 'partition' column and no partition listing supplied", 1);
  }

  std::vector<RawRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_record(line, line_no);
    if (fields.size() != header.arity) {
      throw ParseError("expected " + std::to_string(header.arity) + " fields, found " +
                           std::to_string(fields.size()),
                       line_no);
    }
    RawRow row{line_no, {}, std::nullopt, std::nullopt};
    row.example.id = fields[header.id];
    if (row.example.id.empty()) throw ParseError("empty id", line_no);
    if (header.partition) {
      try {
        row.partition = parse_partition(fields[*header.partition]);
      } catch (const ParseError& e) {
        throw ParseError(e.what(), line_no);
      }
    }
    if (header.cls && !fields[*header.cls].empty()) row.class_name = fields[*header.cls];
    if (header.relevant) {
      const std::string& r = fields[*header.relevant];
      if (r == "1") {
        row.example.relevant = true;
      } else if (r == "0") {
        row.example.relevant = false;
      } else {
        throw ParseError("relevant must be 0 or 1, found '" + r + "'", line_no);
      }
    }
    if (header.source && !fields[*header.source].empty()) {
      row.example.source_tag = fields[*header.source];
    }
    row.example.features.reserve(header.features.size());
    for (std::size_t k = 0; k < header.features.size(); ++k) {
      row.example.features.push_back(parse_feature(fields[header.features[k]], line_no, k));
    }
    rows.push_back(std::move(row));
  }

  Dataset ds;
  ds.dimensionality = header.features.size();
  if (!schema.class_names.empty()) {
    ds.class_names = schema.class_names;
  } else {
    std::set<std::string> names;
    for (const auto& r : rows) {
      if (r.class_name) names.insert(*r.class_name);
    }
    ds.class_names.assign(names.begin(), names.end());
  }
  ds.num_classes = ds.class_names.size();
  std::unordered_map<std::string, int> class_index;
  for (std::size_t i = 0; i < ds.class_names.size(); ++i) {
    if (!class_index.emplace(ds.class_names[i], static_cast<int>(i)).second) {
      throw IntegrityError("duplicate class name '" + ds.class_names[i] + "'");
    }
  }

  std::unordered_set<std::string> seen;
  for (auto& r : rows) {
    if (!seen.insert(r.example.id).second) {
      throw IntegrityError("line " + std::to_string(r.line) + ": duplicate id '" + r.example.id +
                           "'");
    }
    if (auto it = schema.partitions.find(r.example.id); it != schema.partitions.end()) {
      r.partition = it->second;
    }
    if (!r.partition) {
      throw IntegrityError("line " + std::to_string(r.line) + ": no partition for id '" +
                           r.example.id + "'");
    }
    if (r.class_name) {
      auto it = class_index.find(*r.class_name);
      if (it == class_index.end()) {
        throw IntegrityError("line " + std::to_string(r.line) + ": class '" + *r.class_name +
                             "' is not a declared class");
      }
      r.example.true_class = it->second;
    } else if (*r.partition != Partition::Pool) {
      throw IntegrityError("line " + std::to_string(r.line) +
                           ": class may only be empty for pool rows");
    }
    switch (*r.partition) {
      case Partition::Seed: ds.seed_set.push_back(std::move(r.example)); break;
      case Partition::Pool: ds.pool.push_back(std::move(r.example)); break;
      case Partition::Test: ds.test_set.push_back(std::move(r.example)); break;
    }
  }
  if (ds.num_classes == 0) throw IntegrityError("no class names declared or found");
  ds.validate();
  return ds;
}

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return read_csv(in, schema);
}

void write_csv(const Dataset& ds, std::ostream& out) {
  ds.validate();
  const bool with_source = [&] {
    for (const auto* part : {&ds.seed_set, &ds.pool, &ds.test_set}) {
      for (const auto& ex : *part) {
        if (ex.source_tag) return true;
      }
    }
    return false;
  }();

  std::string line = "id,partition,class,relevant";
  for (std::size_t k = 0; k < ds.dimensionality; ++k) line += ",f" + std::to_string(k);
  if (with_source) line += ",source";
  line += '\n';
  out << line;

  auto emit = [&](const std::vector<Example>& part, Partition p) {
    for (const Example& ex : part) {
      line.clear();
      line += quote_if_needed(ex.id);
      line += ',';
      line += to_string(p);
      line += ',';
      if (ex.true_class) line += quote_if_needed(ds.class_names[*ex.true_class]);
      line += ex.relevant ? ",1" : ",0";
      for (double v : ex.features) {
        line += ',';
        format_feature(line, v);
      }
      if (with_source) {
        line += ',';
        if (ex.source_tag) line += quote_if_needed(*ex.source_tag);
      }
      line += '\n';
      out << line;
    }
  };
  emit(ds.seed_set, Partition::Seed);
  emit(ds.pool, Partition::Pool);
  emit(ds.test_set, Partition::Test);
  if (!out) throw IoError("write failed");
}

void write_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_csv(ds, out);
  out.flush();
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t m = spec.num_classes;
  const std::size_t d = spec.dimensionality;
  std::mt19937_64 rng(spec.rng_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  // Cluster means, unit standard deviation.
  std::vector<std::vector<double>> means(m, std::vector<double>(d, 0.0));
  if (d >= m) {
    // Scaled basis vectors: pairwise distance is exactly the separation.
    const double scale = spec.cluster_separation / std::sqrt(2.0) * (1.0 + 1e-12);
    for (std::size_t c = 0; c < m; ++c) means[c][c] = scale;
  } else {
    double half_width = spec.cluster_separation * std::pow(static_cast<double>(m), 1.0 / d);
    for (std::size_t c = 0; c < m; ++c) {
      for (int attempt = 0;; ++attempt) {
        if (attempt > 0 && attempt % 1000 == 0) half_width *= 1.1;
        std::uniform_real_distribution<double> coord(-half_width, half_width);
        for (double& v : means[c]) v = coord(rng);
        bool ok = true;
        for (std::size_t o = 0; o < c && ok; ++o) {
          double dist2 = 0.0;
          for (std::size_t k = 0; k < d; ++k) {
            const double diff = means[c][k] - means[o][k];
            dist2 += diff * diff;
          }
          ok = std::sqrt(dist2) >= spec.cluster_separation;
        }
        if (ok) break;
      }
    }
  }

  Dataset ds;
  ds.dimensionality = d;
  ds.num_classes = m;
  const std::size_t width = std::to_string(m - 1).size();
  for (std::size_t c = 0; c < m; ++c) {
    std::string idx = std::to_string(c);
    ds.class_names.push_back("class" + std::string(width - idx.size(), '0') + idx);
  }

  auto draw = [&](std::size_t c) {
    std::vector<double> x(d);
    for (std::size_t k = 0; k < d; ++k) x[k] = means[c][k] + gauss(rng);
    return x;
  };
  auto fill = [&](std::vector<Example>& part, std::size_t per_class, const char* prefix) {
    for (std::size_t c = 0; c < m; ++c) {
      for (std::size_t i = 0; i < per_class; ++i) {
        Example ex;
        ex.id = prefix + std::to_string(part.size());
        ex.features = draw(c);
        ex.true_class = static_cast<int>(c);
        part.push_back(std::move(ex));
      }
    }
  };
  fill(ds.seed_set, spec.seed_per_class, "s");
  fill(ds.pool, spec.pool_per_class, "p");
  fill(ds.test_set, spec.test_per_class, "t");

  if (spec.irrelevant_count > 0) {
    // Bounding box of every drawn cluster point.
    std::vector<double> lo(d, std::numeric_limits<double>::infinity());
    std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
    for (const auto* part : {&ds.seed_set, &ds.pool, &ds.test_set}) {
      for (const Example& ex : *part) {
        for (std::size_t k = 0; k < d; ++k) {
          lo[k] = std::min(lo[k], ex.features[k]);
          hi[k] = std::max(hi[k], ex.features[k]);
        }
      }
    }
    if (ds.size() == 0) {
      for (std::size_t k = 0; k < d; ++k) {
        lo[k] = hi[k] = means[0][k];
        for (std::size_t c = 1; c < m; ++c) {
          lo[k] = std::min(lo[k], means[c][k]);
          hi[k] = std::max(hi[k], means[c][k]);
        }
      }
    }
    std::uniform_int_distribution<int> noisy_class(0, static_cast<int>(m) - 1);
    for (std::size_t i = 0; i < spec.irrelevant_count; ++i) {
      Example ex;
      ex.id = "p" + std::to_string(ds.pool.size());
      ex.features.resize(d);
      for (std::size_t k = 0; k < d; ++k) {
        ex.features[k] = std::uniform_real_distribution<double>(lo[k], hi[k])(rng);
      }
      ex.true_class = noisy_class(rng);
      ex.relevant = false;
      ds.pool.push_back(std::move(ex));
    }
  }
  std::shuffle(ds.pool.begin(), ds.pool.end(), rng);
  return ds;
}

bool approx_equal(const Dataset& a, const Dataset& b, double rel_tol) {
  if (a.dimensionality != b.dimensionality || a.num_classes != b.num_classes ||
      a.class_names != b.class_names) {
    return false;
  }
  auto same = [&](const std::vector<Example>& x, const std::vector<Example>& y) {
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const Example& p = x[i];
      const Example& q = y[i];
      if (p.id != q.id || p.true_class != q.true_class || p.relevant != q.relevant ||
          p.source_tag != q.source_tag || p.features.size() != q.features.size()) {
        return false;
      }
      for (std::size_t k = 0; k < p.features.size(); ++k) {
        const double scale = std::max({1.0, std::abs(p.features[k]), std::abs(q.features[k])});
        if (std::abs(p.features[k] - q.features[k]) > rel_tol * scale) return false;
      }
    }
    return true;
  };
  return same(a.seed_set, b.seed_set) && same(a.pool, b.pool) && same(a.test_set, b.test_set);
}

}  // namespace alearn
