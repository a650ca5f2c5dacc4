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

// Ranking and classification metrics. `outlierness` is oriented so that
// larger means more outlying; a label > 0 marks an outlier.

#include <algorithm>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "hashchain/core.hpp"

namespace hashchain::bench {

namespace metrics_detail {

inline void check_sizes(std::size_t a, std::size_t b) {
  if (a != b) {
    throw DataError("metric inputs disagree in length: " + std::to_string(a) + " vs " +
                    std::to_string(b));
  }
}

inline std::pair<std::size_t, std::size_t> class_counts(std::span<const int> labels) {
  std::size_t pos = 0;
  for (int l : labels) pos += l > 0 ? 1 : 0;
  return {pos, labels.size() - pos};
}

}  // namespace metrics_detail

/// Probability that a random outlier out-ranks a random inlier, ties counted
/// one half (Mann-Whitney U over mid-ranks).
inline double auroc(std::span<const double> outlierness, std::span<const int> labels) {
  metrics_detail::check_sizes(outlierness.size(), labels.size());
  const auto [pos, neg] = metrics_detail::class_counts(labels);
  if (pos == 0 || neg == 0) throw DataError("AUROC needs both outliers and inliers");
  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return outlierness[a] < outlierness[b]; });
  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && outlierness[order[j]] == outlierness[order[i]]) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t t = i; t < j; ++t) {
      if (labels[order[t]] > 0) pos_rank_sum += mid_rank;
    }
    i = j;
  }
  const double p = static_cast<double>(pos);
  const double u = pos_rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(neg));
}

/// Area under the precision-recall curve as a step integral over distinct
/// thresholds: sum of (recall_i - recall_{i-1}) * precision_i. Tied scores
/// enter as one threshold.
inline double auprc(std::span<const double> outlierness, std::span<const int> labels) {
  metrics_detail::check_sizes(outlierness.size(), labels.size());
  const auto [pos, neg] = metrics_detail::class_counts(labels);
  if (pos == 0 || neg == 0) throw DataError("AUPRC needs both outliers and inliers");
  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return outlierness[a] > outlierness[b]; });
  double area = 0.0;
  double prev_recall = 0.0;
  std::size_t tp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && outlierness[order[j]] == outlierness[order[i]]) {
      tp += labels[order[j]] > 0 ? 1 : 0;
      ++j;
    }
    const double precision = static_cast<double>(tp) / static_cast<double>(j);
    const double recall = static_cast<double>(tp) / static_cast<double>(pos);
    area += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j;
  }
  return area;
}

struct Confusion {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

  double precision() const { return tp + fp == 0 ? 0.0 : double(tp) / double(tp + fp); }
  double recall() const { return tp + fn == 0 ? 0.0 : double(tp) / double(tp + fn); }
};

inline Confusion confusion(const std::vector<bool>& predicted, std::span<const int> labels) {
  metrics_detail::check_sizes(predicted.size(), labels.size());
  Confusion c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool actual = labels[i] > 0;
    if (predicted[i] && actual) ++c.tp;
    else if (predicted[i]) ++c.fp;
    else if (actual) ++c.fn;
    else ++c.tn;
  }
  return c;
}

/// Harmonic mean of precision and recall; 0 when there is no true positive.
inline double f1(const std::vector<bool>& predicted, std::span<const int> labels) {
  const auto c = confusion(predicted, labels);
  if (c.tp == 0) return 0.0;
  const double p = c.precision();
  const double r = c.recall();
  return 2.0 * p * r / (p + r);
}

}  // namespace hashchain::bench
