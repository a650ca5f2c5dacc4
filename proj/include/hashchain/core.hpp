/*
 * Copyright 2026 The hashchain Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hashchain {

/// Malformed input data: unparsable files, bad tokens, invalid points.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user-supplied configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Separator between a categorical feature name and its value when the pair
/// is hashed as one string. Feature names may not contain it.
inline constexpr char kValueSeparator = ':';

inline bool valid_feature_name(std::string_view name) {
  return !name.empty() && name.find(kValueSeparator) == std::string_view::npos;
}

namespace point_detail {

template <typename Vec>
auto lower(Vec& v, std::string_view name) -> decltype(v.begin()) {
  return std::lower_bound(v.begin(), v.end(), name,
                          [](const auto& e, std::string_view n) { return e.first < n; });
}

template <typename Vec>
auto find(Vec& v, std::string_view name) -> decltype(v.begin()) {
  auto it = point_detail::lower(v, name);
  return (it != v.end() && it->first == name) ? it : v.end();
}

}  // namespace point_detail

/// A mixed-type point with a stable identifier.
///
/// Features are kept in two name-sorted flat vectors. A name appears in at
/// most one of them; real values are finite and non-zero (zero entries carry
/// no mass in a projection and are never stored).
class SparsePoint {
 public:
  using RealEntry = std::pair<std::string, double>;
  using CatEntry = std::pair<std::string, std::string>;

  SparsePoint() = default;
  explicit SparsePoint(std::string id) : id_(std::move(id)) {}

  const std::string& id() const { return id_; }
  void set_id(std::string id) { id_ = std::move(id); }

  const std::vector<RealEntry>& real_features() const { return real_; }
  const std::vector<CatEntry>& cat_features() const { return cat_; }

  /// Ground-truth tag for evaluation only; fitting and scoring ignore it.
  const std::optional<int>& label() const { return label_; }
  void set_label(std::optional<int> label) { label_ = label; }

  bool empty() const { return real_.empty() && cat_.empty(); }

  /// Sets a real feature. A zero value removes the feature.
  void set_real(std::string name, double value) {
    check_name(name);
    if (!std::isfinite(value)) {
      throw DataError("non-finite value for feature '" + name + "'");
    }
    if (point_detail::find(cat_, name) != cat_.end()) {
      throw DataError("feature '" + name + "' is already categorical");
    }
    auto it = point_detail::lower(real_, name);
    if (value == 0.0) {
      if (it != real_.end() && it->first == name) real_.erase(it);
      return;
    }
    if (it != real_.end() && it->first == name) {
      it->second = value;
    } else {
      real_.emplace(it, std::move(name), value);
    }
  }

  void set_categorical(std::string name, std::string value) {
    check_name(name);
    if (point_detail::find(real_, name) != real_.end()) {
      throw DataError("feature '" + name + "' is already real-valued");
    }
    auto it = point_detail::lower(cat_, name);
    if (it != cat_.end() && it->first == name) {
      it->second = std::move(value);
    } else {
      cat_.emplace(it, std::move(name), std::move(value));
    }
  }

  void erase_categorical(std::string_view name) {
    auto it = point_detail::find(cat_, name);
    if (it != cat_.end()) cat_.erase(it);
  }

  std::optional<double> real(std::string_view name) const {
    auto it = point_detail::find(real_, name);
    if (it == real_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<std::string> categorical(std::string_view name) const {
    auto it = point_detail::find(cat_, name);
    if (it == cat_.end()) return std::nullopt;
    return it->second;
  }

  friend bool operator==(const SparsePoint&, const SparsePoint&) = default;

 private:
  static void check_name(std::string_view name) {
    if (!valid_feature_name(name)) {
      throw DataError("invalid feature name '" + std::string(name) + "'");
    }
  }

  std::string id_;
  std::vector<RealEntry> real_;
  std::vector<CatEntry> cat_;
  std::optional<int> label_;
};

enum class UpdateKind { kNumericDelta, kCategoricalSubstitution };

/// One incremental change <id, feature, delta> to a point on a stream.
struct UpdateTriple {
  std::string id;
  std::string feature;
  UpdateKind kind = UpdateKind::kNumericDelta;
  double delta = 0.0;
  std::optional<std::string> old_value;  // null for a newly arising feature
  std::string new_value;

  static UpdateTriple numeric(std::string id, std::string feature,
                              double delta) {
    UpdateTriple t;
    t.id = std::move(id);
    t.feature = std::move(feature);
    t.kind = UpdateKind::kNumericDelta;
    t.delta = delta;
    return t;
  }

  static UpdateTriple substitution(std::string id, std::string feature,
                                   std::optional<std::string> old_value,
                                   std::string new_value) {
    UpdateTriple t;
    t.id = std::move(id);
    t.feature = std::move(feature);
    t.kind = UpdateKind::kCategoricalSubstitution;
    t.old_value = std::move(old_value);
    t.new_value = std::move(new_value);
    return t;
  }

  /// Throws DataError when the triple violates its invariants.
  void validate() const {
    if (id.empty()) throw DataError("update triple has an empty id");
    if (!valid_feature_name(feature)) {
      throw DataError("update triple has invalid feature name '" + feature +
                      "'");
    }
    if (kind == UpdateKind::kNumericDelta) {
      if (!std::isfinite(delta)) {
        throw DataError("numeric update for '" + feature +
                        "' has a non-finite delta");
      }
      if (old_value.has_value() || !new_value.empty()) {
        throw DataError("numeric update carries categorical values");
      }
    }
  }

  friend bool operator==(const UpdateTriple&, const UpdateTriple&) = default;
};

enum class ColumnRole { kReal, kCategorical, kId, kLabel };

struct ColumnSpec {
  std::string name;
  ColumnRole role = ColumnRole::kReal;
};

/// Ordered column layout of a dense file. Feature columns are real or
/// categorical; at most one column carries the id and one the label.
class DatasetSchema {
 public:
  DatasetSchema() = default;
  explicit DatasetSchema(std::vector<ColumnSpec> columns)
      : columns_(std::move(columns)) {
    validate();
  }

  /// All-real schema with the given feature names.
  static DatasetSchema all_real(const std::vector<std::string>& names) {
    std::vector<ColumnSpec> cols;
    cols.reserve(names.size());
    for (const auto& n : names) cols.push_back({n, ColumnRole::kReal});
    return DatasetSchema(std::move(cols));
  }

  const std::vector<ColumnSpec>& columns() const { return columns_; }
  std::size_t arity() const { return columns_.size(); }

  std::vector<std::string> feature_names() const {
    std::vector<std::string> out;
    for (const auto& c : columns_) {
      if (c.role == ColumnRole::kReal || c.role == ColumnRole::kCategorical) {
        out.push_back(c.name);
      }
    }
    return out;
  }

 private:
  void validate() const {
    int ids = 0;
    int labels = 0;
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      const auto& c = columns_[i];
      if (c.role == ColumnRole::kId) ++ids;
      if (c.role == ColumnRole::kLabel) ++labels;
      if ((c.role == ColumnRole::kReal || c.role == ColumnRole::kCategorical) &&
          !valid_feature_name(c.name)) {
        throw ConfigError("invalid feature name '" + c.name + "'");
      }
      for (std::size_t j = 0; j < i; ++j) {
        if (columns_[j].name == c.name) {
          throw ConfigError("duplicate column name '" + c.name + "'");
        }
      }
    }
    if (ids > 1) throw ConfigError("schema has more than one id column");
    if (labels > 1) throw ConfigError("schema has more than one label column");
  }

  std::vector<ColumnSpec> columns_;
};

}  // namespace hashchain
