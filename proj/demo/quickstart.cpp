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

// Fits a small ensemble on clustered 2-d points with a few far-away
// outliers, then prints the five most outlying points.

#include <algorithm>
#include <iostream>
#include <vector>

#include "hashchain/bench/grid.hpp"
#include "hashchain/hashchain.hpp"

int main() {
  using namespace hashchain;

  const auto inliers = bench::sample_clustered_2d(20000, 6, 10.0, 0.3, 7);
  const auto data = bench::inject_grid_outliers(inliers, 20, 0.25, 8);

  std::vector<SparsePoint> points;
  for (std::size_t i = 0; i < data.points.size(); ++i) {
    SparsePoint p(std::to_string(i));
    p.set_real("x", data.points[i].x);
    p.set_real("y", data.points[i].y);
    p.set_label(data.labels[i]);
    points.push_back(std::move(p));
  }

  Engine engine;
  const auto ds = engine.parallelize(std::move(points));
  const HashProjector projector(8);
  const auto sketches = project_dataset(engine, ds, projector);

  FitConfig config;
  config.chains = 20;
  config.depth = 12;
  config.run_seed = 1;
  const auto model = fit_ensemble(engine, sketches, projector, config);

  auto records = score_ensemble(engine, sketches, model).collect();
  std::sort(records.begin(), records.end(),
            [](const ScoreRecord& a, const ScoreRecord& b) { return a.score < b.score; });
  std::cout << "id\tscore\tinjected\n";
  for (std::size_t i = 0; i < 5 && i < records.size(); ++i) {
    std::cout << records[i].id << '\t' << records[i].score << '\t'
              << records[i].label.value_or(0) << '\n';
  }
}
