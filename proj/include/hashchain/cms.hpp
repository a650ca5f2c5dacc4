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
#include <compare>
#include <cstring>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hashchain/core.hpp"
#include "hashchain/engine.hpp"
#include "hashchain/hash.hpp"

namespace hashchain {

namespace wire {

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
}

inline std::uint64_t get_u64(std::string_view& in) {
  if (in.size() < 8) throw DataError("truncated binary data");
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[b])) << (8 * b);
  }
  in.remove_prefix(8);
  return v;
}

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
}

inline std::uint32_t get_u32(std::string_view& in) {
  if (in.size() < 4) throw DataError("truncated binary data");
  std::uint32_t v = 0;
  for (int b = 0; b < 4; ++b) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[b])) << (8 * b);
  }
  in.remove_prefix(4);
  return v;
}

inline void put_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  put_u64(out, bits);
}

inline double get_f64(std::string_view& in) {
  const std::uint64_t bits = get_u64(in);
  double v;
  std::memcpy(&v, &bits, sizeof(v));
  return v;
}

}  // namespace wire

/// Canonical byte image of an integer bin-id vector: the component count as
/// a little-endian u64 followed by each component as a little-endian i64.
/// Components can be rewritten in place, so a chain walking its levels only
/// touches the 8 bytes of the coordinate that changed.
class BinKey {
 public:
  BinKey() : bytes_(8, '\0') {}

  explicit BinKey(std::size_t dimension) {
    bytes_.reserve(8 * (dimension + 1));
    wire::put_u64(bytes_, dimension);
    bytes_.append(8 * dimension, '\0');
  }

  static BinKey from(std::span<const std::int64_t> components) {
    BinKey key(components.size());
    for (std::size_t k = 0; k < components.size(); ++k) key.set(k, components[k]);
    return key;
  }

  std::size_t dimension() const { return (bytes_.size() - 8) / 8; }

  void set(std::size_t k, std::int64_t v) {
    auto u = static_cast<std::uint64_t>(v);
    char* p = bytes_.data() + 8 * (k + 1);
    for (int b = 0; b < 8; ++b) p[b] = static_cast<char>((u >> (8 * b)) & 0xFF);
  }

  std::int64_t get(std::size_t k) const {
    std::string_view in(bytes_.data() + 8 * (k + 1), 8);
    return static_cast<std::int64_t>(wire::get_u64(in));
  }

  std::vector<std::int64_t> components() const {
    std::vector<std::int64_t> out(dimension());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = get(k);
    return out;
  }

  std::string_view bytes() const { return bytes_; }

  friend bool operator==(const BinKey&, const BinKey&) = default;
  friend auto operator<=>(const BinKey& a, const BinKey& b) { return a.bytes_ <=> b.bytes_; }

 private:
  std::string bytes_;
};

/// (row, column) coordinate of a counter.
struct CmsCell {
  std::uint32_t row = 0;
  std::uint32_t col = 0;

  friend bool operator==(const CmsCell&, const CmsCell&) = default;
  friend auto operator<=>(const CmsCell&, const CmsCell&) = default;
};

template <>
struct Codec<CmsCell> {
  static void encode(const CmsCell& c, std::string& out) {
    Codec<std::uint32_t>::encode(c.row, out);
    Codec<std::uint32_t>::encode(c.col, out);
  }
  static CmsCell decode(std::string_view& in) {
    CmsCell c;
    c.row = Codec<std::uint32_t>::decode(in);
    c.col = Codec<std::uint32_t>::decode(in);
    return c;
  }
};

/// Sums counts per cell. The result depends only on the multiset of pairs.
template <typename Range>
std::map<CmsCell, std::uint64_t> merge_counts(const Range& pairs) {
  std::map<CmsCell, std::uint64_t> out;
  for (const auto& [cell, count] : pairs) out[cell] += count;
  return out;
}

/// r x w grid of 64-bit counters. Row i places a key in column
/// XXH64(fingerprint(key), row_seeds[i]) mod w; a query returns the minimum
/// over rows, which never underestimates the true count.
class CountMinSketch {
 public:
  CountMinSketch() = default;

  CountMinSketch(std::size_t rows, std::size_t cols, std::vector<std::uint64_t> row_seeds)
      : rows_(rows), cols_(cols), row_seeds_(std::move(row_seeds)), counts_(rows * cols, 0) {
    if (rows == 0 || cols == 0) throw ConfigError("count-min sketch needs r, w >= 1");
    if (row_seeds_.size() != rows) throw ConfigError("count-min sketch needs one seed per row");
    if (rows > std::numeric_limits<std::uint32_t>::max() ||
        cols > std::numeric_limits<std::uint32_t>::max()) {
      throw ConfigError("count-min sketch dimensions exceed 32 bits");
    }
  }

  /// Row seeds hashed from a base seed: seed_i = H(base, i).
  static std::vector<std::uint64_t> derive_row_seeds(std::uint64_t base, std::size_t rows) {
    std::vector<std::uint64_t> seeds(rows);
    for (std::size_t i = 0; i < rows; ++i) seeds[i] = hash_words({base, i});
    return seeds;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  const std::vector<std::uint64_t>& row_seeds() const { return row_seeds_; }
  std::span<const std::uint64_t> counts() const { return counts_; }

  /// 64-bit digest of a key's byte image; rows hash this instead of the
  /// full image, so a key is read once per query rather than r times.
  static std::uint64_t fingerprint(const BinKey& key) { return xxh64(key.bytes(), 0); }

  std::uint32_t column_of(std::size_t row, std::uint64_t fingerprint) const {
    unsigned char buf[8];
    for (int b = 0; b < 8; ++b) buf[b] = static_cast<unsigned char>(fingerprint >> (8 * b));
    return static_cast<std::uint32_t>(xxh64(buf, sizeof(buf), row_seeds_[row]) % cols_);
  }

  std::uint32_t column(std::size_t row, const BinKey& key) const {
    return column_of(row, fingerprint(key));
  }

  /// One ((row, col), 1) pair per row.
  std::vector<std::pair<CmsCell, std::uint64_t>> all_cols(const BinKey& key) const {
    std::vector<std::pair<CmsCell, std::uint64_t>> out;
    out.reserve(rows_);
    const auto fp = fingerprint(key);
    for (std::size_t i = 0; i < rows_; ++i) {
      out.push_back({CmsCell{static_cast<std::uint32_t>(i), column_of(i, fp)}, 1});
    }
    return out;
  }

  void add(const BinKey& key, std::uint64_t count = 1) {
    const auto fp = fingerprint(key);
    for (std::size_t i = 0; i < rows_; ++i) counts_[i * cols_ + column_of(i, fp)] += count;
  }

  void add_cell(CmsCell cell, std::uint64_t count) {
    if (cell.row >= rows_ || cell.col >= cols_) {
      throw DataError("count-min cell out of range");
    }
    counts_[static_cast<std::size_t>(cell.row) * cols_ + cell.col] += count;
  }

  std::uint64_t cell(std::size_t row, std::size_t col) const { return counts_[row * cols_ + col]; }

  std::uint64_t query(const BinKey& key) const {
    std::uint64_t best = std::numeric_limits<std::uint64_t>::max();
    const auto fp = fingerprint(key);
    for (std::size_t i = 0; i < rows_; ++i) {
      best = std::min(best, counts_[i * cols_ + column_of(i, fp)]);
    }
    return rows_ == 0 ? 0 : best;
  }

  /// Header (r, w, seeds) followed by row-major counters, little-endian.
  void serialize(std::string& out) const {
    wire::put_u64(out, rows_);
    wire::put_u64(out, cols_);
    for (auto s : row_seeds_) wire::put_u64(out, s);
    for (auto c : counts_) wire::put_u64(out, c);
  }

  static CountMinSketch deserialize(std::string_view& in) {
    const std::uint64_t rows = wire::get_u64(in);
    const std::uint64_t cols = wire::get_u64(in);
    if (rows == 0 || cols == 0 || rows > (1u << 20) || cols > (1ull << 32) ||
        in.size() / 8 < rows + rows * cols) {
      throw DataError("corrupt count-min sketch header");
    }
    std::vector<std::uint64_t> seeds(rows);
    for (auto& s : seeds) s = wire::get_u64(in);
    CountMinSketch cms(rows, cols, std::move(seeds));
    for (auto& c : cms.counts_) c = wire::get_u64(in);
    return cms;
  }

  std::size_t memory_bytes() const { return counts_.size() * sizeof(std::uint64_t); }

  friend bool operator==(const CountMinSketch&, const CountMinSketch&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint64_t> row_seeds_;
  std::vector<std::uint64_t> counts_;
};

}  // namespace hashchain
