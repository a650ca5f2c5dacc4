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

// Half-space chains.
//
// A chain of depth L picks one projected coordinate per level (with
// replacement) and halves the bin width along it. The bin a sketch occupies
// at level l is identified by the integer vector floor(z), where z is
// maintained incrementally:
//
//   first time coordinate f is picked (level l):  z[f] = (s[f] + shift_l) / delta[f]
//   every later pick of f:                         z[f] = 2 * z[f]
//
// Coordinates not yet picked stay at zero. Each level counts bin occupancy
// in its own count-min sketch.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hashchain/cms.hpp"
#include "hashchain/core.hpp"
#include "hashchain/engine.hpp"
#include "hashchain/hash.hpp"
#include "hashchain/projector.hpp"

namespace hashchain {

/// Shuffle key of the fit stage: one counter of one level's sketch.
struct LevelCell {
  std::uint32_t level = 0;
  std::uint32_t row = 0;
  std::uint32_t col = 0;

  friend bool operator==(const LevelCell&, const LevelCell&) = default;
};

template <>
struct Codec<LevelCell> {
  static void encode(const LevelCell& c, std::string& out) {
    Codec<std::uint32_t>::encode(c.level, out);
    Codec<std::uint32_t>::encode(c.row, out);
    Codec<std::uint32_t>::encode(c.col, out);
  }
  static LevelCell decode(std::string_view& in) {
    LevelCell c;
    c.level = Codec<std::uint32_t>::decode(in);
    c.row = Codec<std::uint32_t>::decode(in);
    c.col = Codec<std::uint32_t>::decode(in);
    return c;
  }
};

}  // namespace hashchain

template <>
struct std::hash<hashchain::LevelCell> {
  std::size_t operator()(const hashchain::LevelCell& c) const noexcept {
    const std::uint64_t packed = (static_cast<std::uint64_t>(c.level) << 48) ^
                                 (static_cast<std::uint64_t>(c.row) << 32) ^ c.col;
    return static_cast<std::size_t>(packed * 0x9E3779B97F4A7C15ULL >> 7);
  }
};

namespace hashchain {

class HalfSpaceChain {
 public:
  HalfSpaceChain() = default;

  /// Shifts must satisfy 0 <= shifts[l] < delta[features[l]]; init() draws
  /// them strictly positive.
  HalfSpaceChain(std::uint64_t seed, std::vector<double> delta,
                 std::vector<std::uint32_t> features, std::vector<double> shifts,
                 std::vector<CountMinSketch> sketches)
      : seed_(seed),
        delta_(std::move(delta)),
        features_(std::move(features)),
        shifts_(std::move(shifts)),
        sketches_(std::move(sketches)) {
    if (delta_.empty()) throw ConfigError("chain needs at least one bin width");
    for (double d : delta_) {
      if (!(d > 0.0) || !std::isfinite(d)) throw ConfigError("bin widths must be positive");
    }
    const std::size_t depth = features_.size();
    if (depth == 0) throw ConfigError("chain depth must be >= 1");
    if (shifts_.size() != depth || sketches_.size() != depth) {
      throw ConfigError("chain levels disagree in length");
    }
    first_occurrence_.assign(depth, 0);
    std::vector<char> seen(delta_.size(), 0);
    for (std::size_t l = 0; l < depth; ++l) {
      const auto f = features_[l];
      if (f >= delta_.size()) throw ConfigError("chain feature index out of range");
      if (!(shifts_[l] >= 0.0 && shifts_[l] < delta_[f])) {
        throw ConfigError("chain shift outside [0, delta)");
      }
      if (!seen[f]) {
        seen[f] = 1;
        first_occurrence_[l] = 1;
      }
    }
  }

  /// Draws features uniformly with replacement from [0, K) and shifts
  /// uniformly from (0, delta[f]) out of an RNG seeded by `seed`. Each level
  /// gets an empty r x w sketch with row seeds hashed from (seed, level, row).
  static HalfSpaceChain init(std::uint64_t seed, std::vector<double> delta,
                             std::size_t depth, std::size_t rows, std::size_t cols) {
    if (delta.empty()) throw ConfigError("chain needs at least one bin width");
    Rng rng(seed);
    std::vector<std::uint32_t> features(depth);
    std::vector<double> shifts(depth);
    std::vector<CountMinSketch> sketches;
    sketches.reserve(depth);
    for (std::size_t l = 0; l < depth; ++l) {
      const auto f = static_cast<std::uint32_t>(rng.below(delta.size()));
      features[l] = f;
      double shift = rng.uniform_open() * delta[f];
      if (shift >= delta[f]) shift = std::nextafter(delta[f], 0.0);
      shifts[l] = shift;
      std::vector<std::uint64_t> row_seeds(rows);
      for (std::size_t i = 0; i < rows; ++i) row_seeds[i] = hash_words({seed, l, i});
      sketches.emplace_back(rows, cols, std::move(row_seeds));
    }
    return HalfSpaceChain(seed, std::move(delta), std::move(features), std::move(shifts),
                          std::move(sketches));
  }

  std::uint64_t seed() const { return seed_; }
  std::size_t dimension() const { return delta_.size(); }
  std::size_t depth() const { return features_.size(); }
  const std::vector<double>& delta() const { return delta_; }
  const std::vector<std::uint32_t>& features() const { return features_; }
  const std::vector<double>& shifts() const { return shifts_; }
  const std::vector<CountMinSketch>& sketches() const { return sketches_; }
  const CountMinSketch& sketch(std::size_t level) const { return sketches_[level]; }
  CountMinSketch& sketch(std::size_t level) { return sketches_[level]; }

  /// Calls visit(level, key) for levels 0..L-1 in order. The key object is
  /// reused between calls.
  template <typename Visit>
  void visit_bins(std::span<const double> s, Visit&& visit) const {
    if (s.size() != delta_.size()) {
      throw DataError("sketch has length " + std::to_string(s.size()) + ", chain expects " +
                      std::to_string(delta_.size()));
    }
    std::vector<double> z(delta_.size(), 0.0);
    BinKey key(delta_.size());
    for (std::size_t l = 0; l < features_.size(); ++l) {
      const auto f = features_[l];
      if (first_occurrence_[l]) {
        z[f] = (s[f] + shifts_[l]) / delta_[f];
      } else {
        z[f] *= 2.0;
      }
      key.set(f, floor_to_int(z[f]));
      visit(l, static_cast<const BinKey&>(key));
    }
  }

  std::vector<BinKey> bin_ids(std::span<const double> s) const {
    std::vector<BinKey> out;
    out.reserve(depth());
    visit_bins(s, [&](std::size_t, const BinKey& key) { out.push_back(key); });
    return out;
  }

  /// min over levels l = 1..L of 2^l * (count-min estimate of the bin).
  double score(std::span<const double> s) const {
    double best = std::numeric_limits<double>::infinity();
    visit_bins(s, [&](std::size_t l, const BinKey& key) {
      const auto count = sketches_[l].query(key);
      best = std::min(best, std::ldexp(static_cast<double>(count), static_cast<int>(l + 1)));
    });
    return best;
  }

  friend bool operator==(const HalfSpaceChain&, const HalfSpaceChain&) = default;

 private:
  static std::int64_t floor_to_int(double z) {
    const double f = std::floor(z);
    constexpr double lim = 9.2e18;
    if (f >= lim) return std::numeric_limits<std::int64_t>::max();
    if (f <= -lim) return std::numeric_limits<std::int64_t>::min();
    return static_cast<std::int64_t>(f);
  }

  std::uint64_t seed_ = 0;
  std::vector<double> delta_;
  std::vector<std::uint32_t> features_;
  std::vector<double> shifts_;
  std::vector<CountMinSketch> sketches_;
  std::vector<char> first_occurrence_;
};

/// Half the per-coordinate range of the projected data, from per-partition
/// extremes merged on the driver. Zero-range coordinates get width 1.
inline std::vector<double> compute_bin_widths(const Engine& engine,
                                              const PartitionedDataset<Sketch>& data,
                                              const std::string& stage = "bin_widths") {
  if (data.empty()) throw DataError("cannot compute bin widths of an empty dataset");
  using Extremes = std::pair<std::vector<double>, std::vector<double>>;
  auto merge_one = [](Extremes acc, std::span<const double> v) {
    if (acc.first.empty()) {
      acc.first.assign(v.begin(), v.end());
      acc.second.assign(v.begin(), v.end());
      return acc;
    }
    if (v.size() != acc.first.size()) throw DataError("sketches disagree in length");
    for (std::size_t k = 0; k < v.size(); ++k) {
      acc.first[k] = std::min(acc.first[k], v[k]);
      acc.second[k] = std::max(acc.second[k], v[k]);
    }
    return acc;
  };
  const Extremes ext = engine.aggregate(
      data, Extremes{},
      [&](Extremes acc, const Sketch& s) { return merge_one(std::move(acc), s.values); },
      [&](Extremes a, Extremes b) {
        if (b.first.empty()) return a;
        a = merge_one(std::move(a), b.first);
        return merge_one(std::move(a), b.second);
      },
      stage);
  std::vector<double> delta(ext.first.size());
  for (std::size_t k = 0; k < delta.size(); ++k) {
    const double half = (ext.second[k] - ext.first[k]) / 2.0;
    delta[k] = half > 0.0 ? half : 1.0;
  }
  return delta;
}

/// Counts the bins of a Bernoulli(sample_rate) sample of `data` into
/// `chain`'s level sketches. Bin-ids of one point at all levels are produced
/// in a single visit, and every (level, row, col) hit is shuffled through
/// one reduce_by_key.
inline HalfSpaceChain fit_chain(const Engine& engine, const PartitionedDataset<Sketch>& data,
                                HalfSpaceChain chain, double sample_rate,
                                std::uint64_t sample_seed,
                                const std::string& stage = "fit_chain") {
  const auto sampled = engine.sample(
      data, sample_rate, sample_seed, [](const Sketch& s) -> const std::string& { return s.id; },
      stage + "/sample");
  if (sampled.empty()) throw DataError("sample is empty; cannot estimate densities");

  const HalfSpaceChain& c = chain;
  const std::size_t rows = c.sketch(0).rows();
  const auto cells = engine.flat_map_reduce_by_key<LevelCell, std::uint64_t>(
      sampled,
      [&c, rows](const Sketch& s, auto&& emit) {
        c.visit_bins(s.values, [&](std::size_t l, const BinKey& key) {
          const auto& cms = c.sketch(l);
          const auto fp = CountMinSketch::fingerprint(key);
          for (std::size_t i = 0; i < rows; ++i) {
            emit(LevelCell{static_cast<std::uint32_t>(l), static_cast<std::uint32_t>(i),
                           cms.column_of(i, fp)},
                 std::uint64_t{1});
          }
        });
      },
      std::plus<>{}, stage);
  for (const auto& [cell, count] : engine.collect_as_map(cells)) {
    chain.sketch(cell.level).add_cell(CmsCell{cell.row, cell.col}, count);
  }
  return chain;
}

struct FitConfig {
  std::size_t chains = 100;   // M
  std::size_t depth = 20;     // L
  std::size_t cms_rows = 10;  // r
  std::size_t cms_cols = 100; // w
  double sample_rate = 1.0;
  std::uint64_t run_seed = 0;
  /// Chains fitted concurrently.
  std::size_t threads = 1;

  void validate() const {
    if (chains == 0 || depth == 0 || cms_rows == 0 || cms_cols == 0) {
      throw ConfigError("M, L, r and w must all be >= 1");
    }
    if (!(sample_rate > 0.0 && sample_rate <= 1.0)) {
      throw ConfigError("sample rate must be in (0, 1]");
    }
    if (depth > 1000) throw ConfigError("chain depth must be <= 1000");
  }
};

struct EnsembleModel {
  std::uint64_t run_seed = 0;
  double sample_rate = 1.0;
  std::size_t depth = 0;
  std::size_t cms_rows = 0;
  std::size_t cms_cols = 0;
  std::vector<std::uint64_t> projector_seeds;
  std::vector<double> delta;
  std::vector<HalfSpaceChain> chains;

  std::size_t dimension() const { return delta.size(); }
  std::size_t chain_count() const { return chains.size(); }
  HashProjector projector() const { return HashProjector(projector_seeds); }

  friend bool operator==(const EnsembleModel&, const EnsembleModel&) = default;
};

/// Seed of chain m: H(run_seed, m). Also used as the chain's sample seed.
inline std::uint64_t chain_seed(std::uint64_t run_seed, std::size_t m) {
  return hash_words({run_seed, m});
}

inline std::string chain_stage_name(std::size_t m) {
  std::string digits = std::to_string(m);
  if (digits.size() < 4) digits.insert(0, 4 - digits.size(), '0');
  return "fit/chain-" + digits;
}

/// Fits M chains over projected data. Chains run on a pool of
/// config.threads threads; each one is a pure function of (data, run seed,
/// chain index), so the model does not depend on scheduling.
inline EnsembleModel fit_ensemble(const Engine& engine, const PartitionedDataset<Sketch>& data,
                                  const HashProjector& projector, const FitConfig& config) {
  config.validate();
  EnsembleModel model;
  model.run_seed = config.run_seed;
  model.sample_rate = config.sample_rate;
  model.depth = config.depth;
  model.cms_rows = config.cms_rows;
  model.cms_cols = config.cms_cols;
  model.projector_seeds = projector.seeds();
  model.delta = compute_bin_widths(engine, data);
  if (model.delta.size() != projector.dimension()) {
    throw DataError("sketch length does not match projector dimension");
  }
  model.chains.resize(config.chains);
  parallel_for(config.threads, config.chains, [&](std::size_t m) {
    const std::uint64_t seed = chain_seed(config.run_seed, m);
    auto chain = HalfSpaceChain::init(seed, model.delta, config.depth, config.cms_rows,
                                      config.cms_cols);
    model.chains[m] =
        fit_chain(engine, data, std::move(chain), config.sample_rate, seed, chain_stage_name(m));
  });
  return model;
}

}  // namespace hashchain
