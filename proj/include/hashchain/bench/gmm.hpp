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

// Diagonal-covariance Gaussian mixtures: EM fitting and the
// variance-inflation outlier benchmark. Inliers are drawn from the fitted
// mixture; outliers from a copy whose variances on a fixed random subset of
// features are multiplied by a constant factor.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "hashchain/bench/dataset.hpp"
#include "hashchain/core.hpp"
#include "hashchain/hash.hpp"

namespace hashchain::bench {

struct GmmSpec {
  std::vector<double> weights;
  std::vector<std::vector<double>> means;
  std::vector<std::vector<double>> variances;

  std::size_t components() const { return weights.size(); }
  std::size_t dims() const { return means.empty() ? 0 : means.front().size(); }

  void validate() const {
    if (weights.empty()) throw ConfigError("mixture has no components");
    if (means.size() != weights.size() || variances.size() != weights.size()) {
      throw ConfigError("mixture component arrays disagree in length");
    }
    double total = 0.0;
    for (std::size_t c = 0; c < weights.size(); ++c) {
      if (!(weights[c] > 0.0)) throw ConfigError("mixture weights must be positive");
      total += weights[c];
      if (means[c].size() != dims() || variances[c].size() != dims()) {
        throw ConfigError("mixture components disagree in dimension");
      }
      for (double v : variances[c]) {
        if (!(v > 0.0)) throw ConfigError("mixture variances must be positive");
      }
    }
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError("mixture weights must sum to 1");
  }
};

namespace gmm_detail {

inline double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) d += (a[j] - b[j]) * (a[j] - b[j]);
  return d;
}

inline std::size_t pick_weighted(Rng& rng, const std::vector<double>& weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  return weights.size() - 1;
}

}  // namespace gmm_detail

/// EM for a k-component diagonal mixture, initialised by k-means++ seeding
/// of the means and the pooled per-feature variance, run for `iters`
/// iterations. Variances are floored at 1e-6 of the pooled variance.
inline GmmSpec fit_diag_gmm(const std::vector<std::vector<double>>& data, std::size_t k,
                            std::size_t iters, std::uint64_t seed) {
  const std::size_t n = data.size();
  if (k == 0) throw ConfigError("mixture needs at least one component");
  if (k > n) throw DataError("more mixture components than inliers");
  const std::size_t d = data.front().size();
  for (const auto& row : data) {
    if (row.size() != d) throw DataError("inlier rows disagree in dimension");
  }

  std::vector<double> mean(d, 0.0);
  std::vector<double> pooled(d, 0.0);
  for (const auto& row : data) {
    for (std::size_t j = 0; j < d; ++j) mean[j] += row[j];
  }
  for (auto& m : mean) m /= static_cast<double>(n);
  for (const auto& row : data) {
    for (std::size_t j = 0; j < d; ++j) pooled[j] += (row[j] - mean[j]) * (row[j] - mean[j]);
  }
  std::vector<double> floor_var(d);
  for (std::size_t j = 0; j < d; ++j) {
    pooled[j] = std::max(pooled[j] / static_cast<double>(n), 1e-12);
    floor_var[j] = 1e-6 * pooled[j];
  }

  Rng rng(seed);
  GmmSpec spec;
  spec.means.push_back(data[rng.below(n)]);
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  while (spec.means.size() < k) {
    for (std::size_t i = 0; i < n; ++i) {
      dist[i] = std::min(dist[i], gmm_detail::squared_distance(data[i], spec.means.back()));
    }
    const double total = std::accumulate(dist.begin(), dist.end(), 0.0);
    spec.means.push_back(total > 0.0 ? data[gmm_detail::pick_weighted(rng, dist)]
                                     : data[rng.below(n)]);
  }
  spec.weights.assign(k, 1.0 / static_cast<double>(k));
  spec.variances.assign(k, pooled);

  std::vector<double> resp(n * k);
  std::vector<double> logp(k);
  for (std::size_t it = 0; it < iters; ++it) {
    // E-step in log space.
    for (std::size_t c = 0; c < k; ++c) {
      double log_norm = std::log(spec.weights[c]);
      for (std::size_t j = 0; j < d; ++j) {
        log_norm -= 0.5 * std::log(2.0 * 3.14159265358979323846 * spec.variances[c][j]);
      }
      logp[c] = log_norm;
    }
    for (std::size_t i = 0; i < n; ++i) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        double lp = logp[c];
        for (std::size_t j = 0; j < d; ++j) {
          const double diff = data[i][j] - spec.means[c][j];
          lp -= 0.5 * diff * diff / spec.variances[c][j];
        }
        resp[i * k + c] = lp;
        best = std::max(best, lp);
      }
      double sum = 0.0;
      for (std::size_t c = 0; c < k; ++c) {
        resp[i * k + c] = std::exp(resp[i * k + c] - best);
        sum += resp[i * k + c];
      }
      for (std::size_t c = 0; c < k; ++c) resp[i * k + c] /= sum;
    }
    // M-step.
    for (std::size_t c = 0; c < k; ++c) {
      double nk = 0.0;
      for (std::size_t i = 0; i < n; ++i) nk += resp[i * k + c];
      if (nk < 1e-10) {
        // Empty component: restart it on a random point.
        spec.means[c] = data[rng.below(n)];
        spec.variances[c] = pooled;
        spec.weights[c] = 1.0 / static_cast<double>(n);
        continue;
      }
      std::vector<double> mu(d, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const double r = resp[i * k + c];
        for (std::size_t j = 0; j < d; ++j) mu[j] += r * data[i][j];
      }
      for (auto& m : mu) m /= nk;
      std::vector<double> var(d, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const double r = resp[i * k + c];
        for (std::size_t j = 0; j < d; ++j) {
          const double diff = data[i][j] - mu[j];
          var[j] += r * diff * diff;
        }
      }
      for (std::size_t j = 0; j < d; ++j) var[j] = std::max(var[j] / nk, floor_var[j]);
      spec.means[c] = std::move(mu);
      spec.variances[c] = std::move(var);
      spec.weights[c] = nk / static_cast<double>(n);
    }
    const double wsum = std::accumulate(spec.weights.begin(), spec.weights.end(), 0.0);
    for (auto& w : spec.weights) w /= wsum;
  }
  return spec;
}

inline std::vector<double> sample_gmm_row(const GmmSpec& spec, Rng& rng,
                                          const std::vector<double>* variance_scale = nullptr) {
  const std::size_t c = gmm_detail::pick_weighted(rng, spec.weights);
  std::vector<double> row(spec.dims());
  for (std::size_t j = 0; j < row.size(); ++j) {
    double var = spec.variances[c][j];
    if (variance_scale != nullptr) var *= (*variance_scale)[j];
    row[j] = rng.normal(spec.means[c][j], std::sqrt(var));
  }
  return row;
}

struct GmmBenchmark {
  LabeledRows data;
  /// 0-based indices of the features whose variance was inflated.
  std::vector<std::size_t> inflated_features;
};

/// round(outlier_frac * n) outliers and the rest inliers, shuffled together.
/// ceil(feature_frac * d) features are inflated, chosen once per dataset.
inline GmmBenchmark sample_gmm_benchmark(const GmmSpec& spec, std::size_t n, double outlier_frac,
                                         double feature_frac, double variance_factor,
                                         std::uint64_t seed) {
  spec.validate();
  if (n == 0) throw ConfigError("benchmark size must be positive");
  if (!(outlier_frac >= 0.0 && outlier_frac < 1.0)) {
    throw ConfigError("outlier fraction must be in [0, 1)");
  }
  if (!(feature_frac > 0.0 && feature_frac <= 1.0)) {
    throw ConfigError("inflated feature fraction must be in (0, 1]");
  }
  if (!(variance_factor > 0.0)) throw ConfigError("variance factor must be positive");

  Rng rng(seed);
  const std::size_t d = spec.dims();
  const auto n_out = static_cast<std::size_t>(std::llround(outlier_frac * static_cast<double>(n)));
  const auto n_feat = std::min<std::size_t>(
      d, static_cast<std::size_t>(std::ceil(feature_frac * static_cast<double>(d) - 1e-9)));

  std::vector<std::size_t> perm(d);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = 0; i < n_feat; ++i) {
    std::swap(perm[i], perm[i + rng.below(d - i)]);
  }
  GmmBenchmark out;
  out.inflated_features.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_feat));
  std::sort(out.inflated_features.begin(), out.inflated_features.end());
  std::vector<double> scale(d, 1.0);
  for (auto j : out.inflated_features) scale[j] = variance_factor;

  out.data.rows.reserve(n);
  out.data.labels.reserve(n);
  for (std::size_t i = 0; i < n - n_out; ++i) {
    out.data.rows.push_back(sample_gmm_row(spec, rng));
    out.data.labels.push_back(0);
  }
  for (std::size_t i = 0; i < n_out; ++i) {
    out.data.rows.push_back(sample_gmm_row(spec, rng, &scale));
    out.data.labels.push_back(1);
  }
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = rng.below(i);
    std::swap(out.data.rows[i - 1], out.data.rows[j]);
    std::swap(out.data.labels[i - 1], out.data.labels[j]);
  }
  return out;
}

/// Stand-in source inliers for the mixture fit: `clusters` Gaussian blobs in
/// d dimensions with means in [-1, 1] per feature and per-feature standard
/// deviations in [0.05, 0.5].
inline std::vector<std::vector<double>> sample_source_inliers(std::size_t n, std::size_t d,
                                                              std::size_t clusters,
                                                              std::uint64_t seed) {
  if (clusters == 0 || d == 0) throw ConfigError("source needs clusters >= 1 and d >= 1");
  Rng rng(seed);
  std::vector<std::vector<double>> centres(clusters, std::vector<double>(d));
  std::vector<std::vector<double>> sds(clusters, std::vector<double>(d));
  for (std::size_t c = 0; c < clusters; ++c) {
    for (std::size_t j = 0; j < d; ++j) {
      centres[c][j] = rng.uniform(-1.0, 1.0);
      sds[c][j] = rng.uniform(0.05, 0.5);
    }
  }
  std::vector<std::vector<double>> out(n, std::vector<double>(d));
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = rng.below(clusters);
    for (std::size_t j = 0; j < d; ++j) out[i][j] = rng.normal(centres[c][j], sds[c][j]);
  }
  return out;
}

}  // namespace hashchain::bench
