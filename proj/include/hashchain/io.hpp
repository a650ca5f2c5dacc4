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

// Text formats:
//   dense CSV   comma-separated, optional header, columns per DatasetSchema
//   sparse kv   "label idx:val idx:val ..." (whitespace-separated)
//   updates     "id,feature,delta-spec" where delta-spec is a real number or
//               "old:new" for a categorical substitution ("" old = null)

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hashchain/core.hpp"
#include "hashchain/engine.hpp"

namespace hashchain {

namespace io_detail {

inline std::string_view trim(std::string_view s) {
  const char* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(s.substr(start)));
      return out;
    }
    out.push_back(trim(s.substr(start, pos - start)));
    start = pos + 1;
  }
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open input file '" + path + "'");
  return in;
}

}  // namespace io_detail

/// Parses a finite real; accepts a leading '+'.
inline std::optional<double> parse_real(std::string_view token) {
  token = io_detail::trim(token);
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  if (token.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

inline std::optional<long long> parse_integer(std::string_view token) {
  token = io_detail::trim(token);
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  if (token.empty()) return std::nullopt;
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size()) return std::nullopt;
  return v;
}

/// Shortest decimal text that parses back to exactly `v`.
inline std::string format_real(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

// ---------------------------------------------------------------------------
// Dense CSV.

/// Column names from the first non-empty line of a CSV file.
inline std::vector<std::string> read_csv_header(const std::string& path) {
  auto in = io_detail::open_input(path);
  std::string line;
  while (std::getline(in, line)) {
    if (io_detail::trim(line).empty()) continue;
    std::vector<std::string> names;
    for (auto tok : io_detail::split(line, ',')) names.emplace_back(tok);
    return names;
  }
  return {};
}

/// Number of comma-separated fields on the first non-empty line.
inline std::size_t read_csv_arity(const std::string& path) {
  return read_csv_header(path).size();
}

inline std::vector<SparsePoint> parse_dense_csv_stream(std::istream& in,
                                                       const DatasetSchema& schema,
                                                       bool has_header) {
  std::vector<SparsePoint> points;
  std::string line;
  std::size_t line_no = 0;
  bool header_pending = has_header;
  const auto& cols = schema.columns();
  while (std::getline(in, line)) {
    ++line_no;
    if (io_detail::trim(line).empty()) continue;
    const auto tokens = io_detail::split(line, ',');
    if (tokens.size() != cols.size()) {
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(cols.size()) + " fields, found " +
                      std::to_string(tokens.size()));
    }
    if (header_pending) {
      header_pending = false;
      continue;
    }
    SparsePoint p(std::to_string(points.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const auto tok = tokens[c];
      switch (cols[c].role) {
        case ColumnRole::kReal: {
          const auto v = parse_real(tok);
          if (!v) {
            throw DataError("line " + std::to_string(line_no) + ": column '" +
                            cols[c].name + "' has non-numeric value '" +
                            std::string(tok) + "'");
          }
          p.set_real(cols[c].name, *v);
          break;
        }
        case ColumnRole::kCategorical:
          if (!tok.empty()) p.set_categorical(cols[c].name, std::string(tok));
          break;
        case ColumnRole::kId:
          if (tok.empty()) {
            throw DataError("line " + std::to_string(line_no) + ": empty id");
          }
          p.set_id(std::string(tok));
          break;
        case ColumnRole::kLabel: {
          const auto v = parse_integer(tok);
          if (!v) {
            throw DataError("line " + std::to_string(line_no) +
                            ": label is not an integer: '" + std::string(tok) + "'");
          }
          p.set_label(static_cast<int>(*v));
          break;
        }
      }
    }
    points.push_back(std::move(p));
  }
  return points;
}

inline PartitionedDataset<SparsePoint> parse_dense_csv(const std::string& path,
                                                       const DatasetSchema& schema,
                                                       bool has_header,
                                                       std::size_t partitions = 1) {
  auto in = io_detail::open_input(path);
  try {
    return PartitionedDataset<SparsePoint>::from_vector(
        parse_dense_csv_stream(in, schema, has_header), partitions);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Sparse key-value.

inline std::string sparse_feature_name(long long index) {
  return "f" + std::to_string(index);
}

/// Parses one "label idx:val ..." line into a point with the given id.
inline SparsePoint parse_sparse_kv_line(std::string_view line, std::string id) {
  const auto tokens = io_detail::split_ws(line);
  if (tokens.empty()) throw DataError("empty sparse line");
  SparsePoint p(std::move(id));
  const auto label = parse_integer(tokens[0]);
  if (!label) {
    throw DataError("label is not an integer: '" + std::string(tokens[0]) + "'");
  }
  p.set_label(static_cast<int>(*label));
  std::set<long long> seen;
  for (std::size_t t = 1; t < tokens.size(); ++t) {
    const auto tok = tokens[t];
    const auto colon = tok.find(':');
    if (colon == std::string_view::npos) {
      throw DataError("token '" + std::string(tok) + "' is not idx:val");
    }
    const auto idx = parse_integer(tok.substr(0, colon));
    if (!idx || *idx < 0) {
      throw DataError("bad feature index in '" + std::string(tok) + "'");
    }
    const auto val = parse_real(tok.substr(colon + 1));
    if (!val) throw DataError("bad feature value in '" + std::string(tok) + "'");
    if (!seen.insert(*idx).second) {
      throw DataError("duplicate feature index " + std::to_string(*idx));
    }
    p.set_real(sparse_feature_name(*idx), *val);
  }
  return p;
}

inline std::vector<SparsePoint> parse_sparse_kv_stream(std::istream& in) {
  std::vector<SparsePoint> points;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (io_detail::trim(line).empty()) continue;
    try {
      points.push_back(parse_sparse_kv_line(line, std::to_string(points.size())));
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return points;
}

inline PartitionedDataset<SparsePoint> parse_sparse_kv(const std::string& path,
                                                       std::size_t partitions = 1) {
  auto in = io_detail::open_input(path);
  try {
    return PartitionedDataset<SparsePoint>::from_vector(parse_sparse_kv_stream(in),
                                                        partitions);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

/// Serializes a real-only point whose feature names are "f<index>". The
/// label defaults to 0 when the point has none.
inline std::string format_sparse_kv_line(const SparsePoint& p) {
  if (!p.cat_features().empty()) {
    throw DataError("sparse kv cannot represent categorical features");
  }
  std::vector<std::pair<long long, double>> entries;
  for (const auto& [name, value] : p.real_features()) {
    const auto idx = name.size() > 1 && name[0] == 'f'
                         ? parse_integer(std::string_view(name).substr(1))
                         : std::nullopt;
    if (!idx || *idx < 0 || sparse_feature_name(*idx) != name) {
      throw DataError("feature '" + name + "' is not of the form f<index>");
    }
    entries.emplace_back(*idx, value);
  }
  std::sort(entries.begin(), entries.end());
  std::string out = std::to_string(p.label().value_or(0));
  for (const auto& [idx, value] : entries) {
    out += ' ';
    out += std::to_string(idx);
    out += ':';
    out += format_real(value);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Update triples.

inline UpdateTriple parse_update(std::string_view line) {
  line = io_detail::trim(line);
  const auto first = line.find(',');
  const auto second =
      first == std::string_view::npos ? first : line.find(',', first + 1);
  if (second == std::string_view::npos) {
    throw DataError("update '" + std::string(line) +
                    "' is not of the form id,feature,delta");
  }
  const auto id = io_detail::trim(line.substr(0, first));
  const auto feature = io_detail::trim(line.substr(first + 1, second - first - 1));
  const auto spec = io_detail::trim(line.substr(second + 1));
  if (id.empty()) throw DataError("update has an empty id");
  if (!valid_feature_name(feature)) {
    throw DataError("update has invalid feature name '" + std::string(feature) + "'");
  }

  UpdateTriple t;
  const auto colon = spec.find(':');
  if (colon != std::string_view::npos) {
    const auto old_v = spec.substr(0, colon);
    const auto new_v = spec.substr(colon + 1);
    t = UpdateTriple::substitution(
        std::string(id), std::string(feature),
        old_v.empty() ? std::nullopt : std::optional<std::string>(old_v),
        std::string(new_v));
  } else {
    const auto delta = parse_real(spec);
    if (!delta) {
      throw DataError("update delta '" + std::string(spec) + "' is not a real number");
    }
    t = UpdateTriple::numeric(std::string(id), std::string(feature), *delta);
  }
  t.validate();
  return t;
}

inline std::string format_update(const UpdateTriple& t) {
  std::string out = t.id + "," + t.feature + ",";
  if (t.kind == UpdateKind::kNumericDelta) {
    out += format_real(t.delta);
  } else {
    out += t.old_value.value_or("");
    out += ':';
    out += t.new_value;
  }
  return out;
}

}  // namespace hashchain
