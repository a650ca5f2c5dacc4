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

// Grid-cell outlier injection for 2-d data: build an occupancy grid, mark
// every empty cell whose 8 neighbours are also empty, and draw outliers
// uniformly over marked cells and uniformly within the chosen cell.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "hashchain/bench/dataset.hpp"
#include "hashchain/core.hpp"
#include "hashchain/hash.hpp"

namespace hashchain::bench {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

struct Bounds {
  double xmin = 0.0, xmax = 0.0, ymin = 0.0, ymax = 0.0;
};

/// Occupancy grid over `bounds`. The grid holds ceil(width / cell) columns
/// starting at xmin (likewise rows), so its right and top edges may extend
/// past the requested bounds by less than a cell.
class GridIndex {
 public:
  GridIndex(Bounds bounds, double cell_size) : bounds_(bounds), cell_(cell_size) {
    if (!(cell_size > 0.0)) throw ConfigError("grid cell size must be positive");
    if (!(bounds.xmax > bounds.xmin) || !(bounds.ymax > bounds.ymin)) {
      throw ConfigError("grid bounds must have positive extent");
    }
    nx_ = static_cast<std::size_t>(std::ceil((bounds.xmax - bounds.xmin) / cell_size));
    ny_ = static_cast<std::size_t>(std::ceil((bounds.ymax - bounds.ymin) / cell_size));
    nx_ = std::max<std::size_t>(nx_, 1);
    ny_ = std::max<std::size_t>(ny_, 1);
    if (static_cast<double>(nx_) * static_cast<double>(ny_) > 4e9) {
      throw ConfigError("grid has too many cells");
    }
    occupied_.assign(nx_ * ny_, false);
  }

  /// Bounding box of `points` expanded by one cell on every side.
  static GridIndex covering(std::span<const Point2> points, double cell_size) {
    if (points.empty()) throw DataError("cannot build a grid over no points");
    Bounds b{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
             std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto& p : points) {
      b.xmin = std::min(b.xmin, p.x);
      b.xmax = std::max(b.xmax, p.x);
      b.ymin = std::min(b.ymin, p.y);
      b.ymax = std::max(b.ymax, p.y);
    }
    b.xmin -= cell_size;
    b.ymin -= cell_size;
    b.xmax += cell_size;
    b.ymax += cell_size;
    GridIndex g(b, cell_size);
    for (const auto& p : points) g.insert(p);
    return g;
  }

  std::size_t columns() const { return nx_; }
  std::size_t rows() const { return ny_; }
  std::size_t cell_count() const { return nx_ * ny_; }
  double cell_size() const { return cell_; }
  const Bounds& bounds() const { return bounds_; }

  bool contains(Point2 p) const {
    return p.x >= bounds_.xmin && p.y >= bounds_.ymin &&
           p.x < bounds_.xmin + cell_ * static_cast<double>(nx_) &&
           p.y < bounds_.ymin + cell_ * static_cast<double>(ny_);
  }

  std::pair<std::size_t, std::size_t> cell_of(Point2 p) const {
    if (!contains(p)) throw DataError("point lies outside the grid bounds");
    auto ix = static_cast<std::size_t>(std::floor((p.x - bounds_.xmin) / cell_));
    auto iy = static_cast<std::size_t>(std::floor((p.y - bounds_.ymin) / cell_));
    return {std::min(ix, nx_ - 1), std::min(iy, ny_ - 1)};
  }

  void insert(Point2 p) {
    const auto [ix, iy] = cell_of(p);
    occupied_[iy * nx_ + ix] = true;
  }

  bool occupied(std::size_t ix, std::size_t iy) const { return occupied_[iy * nx_ + ix]; }

  /// Empty with all 8 neighbours empty. Neighbours beyond the grid edge
  /// hold no points and count as empty.
  bool markable(std::size_t ix, std::size_t iy) const {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const auto jx = static_cast<std::int64_t>(ix) + dx;
        const auto jy = static_cast<std::int64_t>(iy) + dy;
        if (jx < 0 || jy < 0 || jx >= static_cast<std::int64_t>(nx_) ||
            jy >= static_cast<std::int64_t>(ny_)) {
          continue;
        }
        if (occupied(static_cast<std::size_t>(jx), static_cast<std::size_t>(jy))) return false;
      }
    }
    return true;
  }

  std::size_t count_markable() const {
    std::size_t n = 0;
    for (std::size_t iy = 0; iy < ny_; ++iy) {
      for (std::size_t ix = 0; ix < nx_; ++ix) n += markable(ix, iy) ? 1 : 0;
    }
    return n;
  }

  Point2 cell_origin(std::size_t ix, std::size_t iy) const {
    return {bounds_.xmin + cell_ * static_cast<double>(ix),
            bounds_.ymin + cell_ * static_cast<double>(iy)};
  }

 private:
  Bounds bounds_;
  double cell_;
  std::size_t nx_ = 0;
  std::size_t ny_ = 0;
  std::vector<bool> occupied_;
};

struct GridBenchmark {
  std::vector<Point2> points;
  std::vector<int> labels;
  std::size_t markable_cells = 0;

  LabeledRows rows() const {
    LabeledRows out;
    out.rows.reserve(points.size());
    for (const auto& p : points) out.rows.push_back({p.x, p.y});
    out.labels = labels;
    return out;
  }
};

/// Returns the inliers unchanged (label 0) followed by `count` injected
/// outliers (label 1). Bounds default to the inliers' bounding box expanded
/// by one cell.
inline GridBenchmark inject_grid_outliers(std::span<const Point2> inliers, std::size_t count,
                                          double cell_size, std::uint64_t seed,
                                          std::optional<Bounds> bounds = std::nullopt) {
  GridIndex grid = bounds ? GridIndex(*bounds, cell_size) : GridIndex::covering(inliers, cell_size);
  if (bounds) {
    for (const auto& p : inliers) grid.insert(p);
  }
  const std::size_t markable = grid.count_markable();
  if (markable == 0) throw DataError("no grid cell is empty with 8 empty neighbours");

  GridBenchmark out;
  out.markable_cells = markable;
  out.points.assign(inliers.begin(), inliers.end());
  out.labels.assign(inliers.size(), 0);
  out.points.reserve(inliers.size() + count);
  out.labels.reserve(inliers.size() + count);

  Rng rng(seed);
  std::vector<std::uint64_t> marked;
  const bool enumerate = markable * 100 < grid.cell_count();
  if (enumerate) {
    marked.reserve(markable);
    for (std::size_t iy = 0; iy < grid.rows(); ++iy) {
      for (std::size_t ix = 0; ix < grid.columns(); ++ix) {
        if (grid.markable(ix, iy)) marked.push_back(iy * grid.columns() + ix);
      }
    }
  }
  for (std::size_t n = 0; n < count; ++n) {
    std::size_t ix = 0;
    std::size_t iy = 0;
    if (enumerate) {
      const auto cell = marked[rng.below(marked.size())];
      ix = cell % grid.columns();
      iy = cell / grid.columns();
    } else {
      // Rejection over all cells is uniform over the marked ones.
      do {
        ix = rng.below(grid.columns());
        iy = rng.below(grid.rows());
      } while (!grid.markable(ix, iy));
    }
    const Point2 origin = grid.cell_origin(ix, iy);
    Point2 p;
    do {
      p = {origin.x + cell_size * rng.uniform(), origin.y + cell_size * rng.uniform()};
    } while (!grid.contains(p) || grid.cell_of(p) != std::pair{ix, iy});
    out.points.push_back(p);
    out.labels.push_back(1);
  }
  return out;
}

/// Inlier generator: isotropic 2-d Gaussian clusters with random centres in
/// [0, extent)^2, spreads in [0.5, 1.5] * spread and random weights.
inline std::vector<Point2> sample_clustered_2d(std::size_t n, std::size_t clusters, double extent,
                                               double spread, std::uint64_t seed) {
  if (clusters == 0) throw ConfigError("need at least one cluster");
  Rng rng(seed);
  std::vector<Point2> centres(clusters);
  std::vector<double> sigma(clusters);
  std::vector<double> cumulative(clusters);
  double total = 0.0;
  for (std::size_t c = 0; c < clusters; ++c) {
    centres[c] = {rng.uniform(0.0, extent), rng.uniform(0.0, extent)};
    sigma[c] = spread * rng.uniform(0.5, 1.5);
    total += rng.uniform(0.2, 1.0);
    cumulative[c] = total;
  }
  std::vector<Point2> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform() * total;
    const auto c = static_cast<std::size_t>(
        std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
    const auto k = std::min(c, clusters - 1);
    out.push_back({rng.normal(centres[k].x, sigma[k]), rng.normal(centres[k].y, sigma[k])});
  }
  return out;
}

}  // namespace hashchain::bench
