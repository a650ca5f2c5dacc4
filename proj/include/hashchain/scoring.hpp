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
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "hashchain/chain.hpp"
#include "hashchain/engine.hpp"
#include "hashchain/io.hpp"
#include "hashchain/projector.hpp"

namespace hashchain {

/// Ensemble score of one point. Lower means more outlying.
struct ScoreRecord {
  std::string id;
  double score = 0.0;
  std::optional<int> label;

  /// Orientation consumed by ranking metrics: higher is more outlying.
  double outlierness() const { return score == 0.0 ? 0.0 : -score; }

  friend bool operator==(const ScoreRecord&, const ScoreRecord&) = default;
};

inline double score_point_chain(std::span<const double> sketch, const HalfSpaceChain& chain) {
  return chain.score(sketch);
}

/// Mean of the per-chain scores, summed in chain order.
inline double score_point(std::span<const double> sketch, const EnsembleModel& model) {
  if (sketch.size() != model.dimension()) {
    throw DataError("sketch has length " + std::to_string(sketch.size()) + ", model expects K=" +
                    std::to_string(model.dimension()));
  }
  double sum = 0.0;
  for (const auto& chain : model.chains) sum += chain.score(sketch);
  return sum / static_cast<double>(model.chain_count());
}

inline PartitionedDataset<ScoreRecord> score_ensemble(const Engine& engine,
                                                      const PartitionedDataset<Sketch>& data,
                                                      const Broadcast<EnsembleModel>& model,
                                                      const std::string& stage = "score") {
  // Chain-major within a partition: one chain's sketches stay cache-resident
  // while every point of the partition is walked through it. Each point still
  // accumulates its chain scores in chain order, matching score_point().
  return engine.map_partitions(
      data,
      [&model](std::span<const Sketch> part, auto&& on_index) {
        const EnsembleModel& m = model.value();
        for (std::size_t i = 0; i < part.size(); ++i) {
          on_index(i);
          if (part[i].values.size() != m.dimension()) {
            throw DataError("sketch has length " + std::to_string(part[i].values.size()) +
                            ", model expects K=" + std::to_string(m.dimension()));
          }
        }
        std::vector<double> sums(part.size(), 0.0);
        for (const auto& chain : m.chains) {
          for (std::size_t i = 0; i < part.size(); ++i) sums[i] += chain.score(part[i].values);
        }
        std::vector<ScoreRecord> out;
        out.reserve(part.size());
        for (std::size_t i = 0; i < part.size(); ++i) {
          out.push_back(ScoreRecord{part[i].id, sums[i] / static_cast<double>(m.chain_count()),
                                    part[i].label});
        }
        return out;
      },
      stage);
}

/// Non-owning convenience overload; `model` must outlive the call.
inline PartitionedDataset<ScoreRecord> score_ensemble(const Engine& engine,
                                                      const PartitionedDataset<Sketch>& data,
                                                      const EnsembleModel& model,
                                                      const std::string& stage = "score") {
  const Broadcast<EnsembleModel> shared(
      std::shared_ptr<const EnsembleModel>(std::shared_ptr<const EnsembleModel>{}, &model));
  return score_ensemble(engine, data, shared, stage);
}

/// Flags the ceil(contamination * n) lowest-scoring records (at least one),
/// ties broken by id. The result is aligned with `records`.
inline std::vector<bool> rank_and_label(std::span<const ScoreRecord> records,
                                        double contamination) {
  if (!(contamination > 0.0 && contamination < 1.0)) {
    throw ConfigError("contamination must be in (0, 1)");
  }
  const std::size_t n = records.size();
  std::vector<bool> flagged(n, false);
  if (n == 0) return flagged;
  const double raw = std::ceil(contamination * static_cast<double>(n) - 1e-9);
  const std::size_t k =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::max(raw, 1.0)), 1, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (records[a].score != records[b].score) return records[a].score < records[b].score;
    return records[a].id < records[b].id;
  });
  for (std::size_t i = 0; i < k; ++i) flagged[order[i]] = true;
  return flagged;
}

/// TSV with header "id score outlierness" plus "predicted" when flags are given.
inline void write_scores_tsv(std::ostream& out, std::span<const ScoreRecord> records,
                             const std::vector<bool>* flags = nullptr) {
  out << "id\tscore\toutlierness";
  if (flags != nullptr) out << "\tpredicted";
  out << '\n';
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    out << r.id << '\t' << format_real(r.score) << '\t' << format_real(r.outlierness());
    if (flags != nullptr) out << '\t' << ((*flags)[i] ? 1 : 0);
    out << '\n';
  }
}

}  // namespace hashchain
