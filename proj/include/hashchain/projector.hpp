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

// Sparse hashed random projection.
//
// Entry k of the (never materialized) random vector for feature string F is
// h_k(F) in {+1, -1, 0} with probabilities 1/6, 1/6, 2/3. A real feature
// contributes h_k(name) * value; a categorical feature contributes
// h_k(name ":" value), i.e. its one-hot column with value 1.

#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hashchain/core.hpp"
#include "hashchain/engine.hpp"
#include "hashchain/hash.hpp"

namespace hashchain {

/// A K-dimensional projection of one point.
struct Sketch {
  std::string id;
  std::vector<double> values;
  std::optional<int> label;

  friend bool operator==(const Sketch&, const Sketch&) = default;
};

/// Maps H64(seed, s) mod 6 to +1 (0), -1 (1) or 0 (2..5).
inline int hash_component(std::uint64_t seed, std::string_view s) {
  switch (xxh64(s, seed) % 6) {
    case 0:
      return 1;
    case 1:
      return -1;
    default:
      return 0;
  }
}

inline std::string categorical_key(std::string_view feature, std::string_view value) {
  std::string key;
  key.reserve(feature.size() + 1 + value.size());
  key.append(feature);
  key.push_back(kValueSeparator);
  key.append(value);
  return key;
}

/// Nonzero entries of one feature's K hash components.
struct SignedIndex {
  std::uint32_t index;
  double sign;
};

/// Per-worker memo of the nonzero components of real-valued feature names.
class FeatureHashCache {
 public:
  const std::vector<SignedIndex>* find(const std::string& name) const {
    auto it = signs_.find(name);
    return it == signs_.end() ? nullptr : &it->second;
  }
  const std::vector<SignedIndex>& insert(const std::string& name, std::vector<SignedIndex> nz) {
    return signs_.emplace(name, std::move(nz)).first->second;
  }
  std::size_t size() const { return signs_.size(); }

 private:
  std::unordered_map<std::string, std::vector<SignedIndex>> signs_;
};

class HashProjector {
 public:
  /// K hash functions with seeds 0, 1, ..., K-1.
  explicit HashProjector(std::size_t dimension)
      : seeds_(dimension) {
    if (dimension == 0) throw ConfigError("projection dimension must be >= 1");
    std::iota(seeds_.begin(), seeds_.end(), std::uint64_t{0});
  }

  explicit HashProjector(std::vector<std::uint64_t> seeds) : seeds_(std::move(seeds)) {
    if (seeds_.empty()) throw ConfigError("projection dimension must be >= 1");
  }

  std::size_t dimension() const { return seeds_.size(); }
  const std::vector<std::uint64_t>& seeds() const { return seeds_; }

  int component(std::size_t k, std::string_view s) const {
    return hash_component(seeds_[k], s);
  }

  std::vector<std::int8_t> signs(std::string_view s) const {
    std::vector<std::int8_t> out(seeds_.size());
    for (std::size_t k = 0; k < seeds_.size(); ++k) {
      out[k] = static_cast<std::int8_t>(hash_component(seeds_[k], s));
    }
    return out;
  }

  std::vector<SignedIndex> nonzero_signs(std::string_view s) const {
    std::vector<SignedIndex> out;
    for (std::size_t k = 0; k < seeds_.size(); ++k) {
      const int c = hash_component(seeds_[k], s);
      if (c != 0) out.push_back({static_cast<std::uint32_t>(k), static_cast<double>(c)});
    }
    return out;
  }

  Sketch zero_sketch(std::string id) const {
    return Sketch{std::move(id), std::vector<double>(seeds_.size(), 0.0), std::nullopt};
  }

  Sketch project(const SparsePoint& point, FeatureHashCache* cache = nullptr) const {
    Sketch s = zero_sketch(point.id());
    s.label = point.label();
    const std::size_t dim = seeds_.size();
    for (const auto& [name, value] : point.real_features()) {
      if (cache != nullptr) {
        const auto* memo = cache->find(name);
        const auto& nz = memo != nullptr ? *memo : cache->insert(name, nonzero_signs(name));
        for (const auto& e : nz) s.values[e.index] += e.sign * value;
      } else {
        for (std::size_t k = 0; k < dim; ++k) {
          s.values[k] += hash_component(seeds_[k], name) * value;
        }
      }
    }
    for (const auto& [name, value] : point.cat_features()) {
      const std::string key = categorical_key(name, value);
      for (std::size_t k = 0; k < dim; ++k) {
        s.values[k] += hash_component(seeds_[k], key);
      }
    }
    return s;
  }

  /// In-place O(K) update of a sketch by one triple.
  void apply(Sketch& s, const UpdateTriple& t) const {
    if (s.values.size() != seeds_.size()) {
      throw DataError("sketch has length " + std::to_string(s.values.size()) +
                      ", projector expects " + std::to_string(seeds_.size()));
    }
    t.validate();
    const std::size_t dim = seeds_.size();
    if (t.kind == UpdateKind::kNumericDelta) {
      if (t.delta == 0.0) return;
      for (std::size_t k = 0; k < dim; ++k) {
        s.values[k] += hash_component(seeds_[k], t.feature) * t.delta;
      }
      return;
    }
    const std::string new_key = categorical_key(t.feature, t.new_value);
    if (t.old_value.has_value()) {
      if (*t.old_value == t.new_value) return;
      const std::string old_key = categorical_key(t.feature, *t.old_value);
      for (std::size_t k = 0; k < dim; ++k) {
        s.values[k] += hash_component(seeds_[k], new_key) -
                       hash_component(seeds_[k], old_key);
      }
    } else {
      for (std::size_t k = 0; k < dim; ++k) {
        s.values[k] += hash_component(seeds_[k], new_key);
      }
    }
  }

  Sketch updated(Sketch s, const UpdateTriple& t) const {
    apply(s, t);
    return s;
  }

 private:
  std::vector<std::uint64_t> seeds_;
};

/// Projects every point; each partition task keeps its own name-hash memo.
inline PartitionedDataset<Sketch> project_dataset(const Engine& engine,
                                                  const PartitionedDataset<SparsePoint>& points,
                                                  const HashProjector& projector,
                                                  const std::string& stage = "project") {
  return engine.map_partitions(
      points,
      [&projector](std::span<const SparsePoint> part, auto&& on_index) {
        FeatureHashCache cache;
        std::vector<Sketch> out;
        out.reserve(part.size());
        for (std::size_t i = 0; i < part.size(); ++i) {
          on_index(i);
          out.push_back(projector.project(part[i], &cache));
        }
        return out;
      },
      stage);
}

}  // namespace hashchain
