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

#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "hashchain/core.hpp"
#include "hashchain/io.hpp"

namespace hashchain::bench {

/// Dense real rows with 0/1 labels (1 = outlier).
struct LabeledRows {
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;

  std::size_t size() const { return rows.size(); }
  std::size_t dims() const { return rows.empty() ? 0 : rows.front().size(); }
  std::size_t outliers() const {
    std::size_t n = 0;
    for (int l : labels) n += l > 0 ? 1 : 0;
    return n;
  }
};

/// Feature j (0-based) of a generated row is named "f<j+1>", which is also
/// what the sparse kv parser assigns to index j+1.
inline std::string generated_feature_name(std::size_t j) { return "f" + std::to_string(j + 1); }

inline std::vector<SparsePoint> to_points(const LabeledRows& data) {
  std::vector<SparsePoint> out;
  out.reserve(data.size());
  std::vector<std::string> names(data.dims());
  for (std::size_t j = 0; j < names.size(); ++j) names[j] = generated_feature_name(j);
  for (std::size_t i = 0; i < data.size(); ++i) {
    SparsePoint p(std::to_string(i));
    for (std::size_t j = 0; j < data.rows[i].size(); ++j) p.set_real(names[j], data.rows[i][j]);
    if (i < data.labels.size()) p.set_label(data.labels[i]);
    out.push_back(std::move(p));
  }
  return out;
}

/// Header "f1,...,fd,label" then one row per point.
inline void write_dense_labeled(std::ostream& out, const LabeledRows& data) {
  const std::size_t d = data.dims();
  for (std::size_t j = 0; j < d; ++j) out << generated_feature_name(j) << ',';
  out << "label\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t j = 0; j < d; ++j) out << format_real(data.rows[i][j]) << ',';
    out << data.labels[i] << '\n';
  }
}

/// "label idx:val ..." with 1-based indices; zero entries are omitted.
inline void write_sparse_labeled(std::ostream& out, const LabeledRows& data) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << data.labels[i];
    for (std::size_t j = 0; j < data.rows[i].size(); ++j) {
      if (data.rows[i][j] != 0.0) out << ' ' << (j + 1) << ':' << format_real(data.rows[i][j]);
    }
    out << '\n';
  }
}

inline void write_labeled(const std::string& path, const LabeledRows& data, bool sparse) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path + "'");
  if (sparse) {
    write_sparse_labeled(out, data);
  } else {
    write_dense_labeled(out, data);
  }
  if (!out) throw DataError("failed writing '" + path + "'");
}

}  // namespace hashchain::bench
