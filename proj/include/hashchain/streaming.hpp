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

// Scores a stream of update triples against a frozen model. Sketches of
// recently updated ids live in a fixed-capacity LRU cache; an id that was
// evicted (or never seen) restarts from the zero sketch.

#include <cstddef>
#include <functional>
#include <istream>
#include <list>
#include <memory>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "hashchain/chain.hpp"
#include "hashchain/io.hpp"
#include "hashchain/projector.hpp"
#include "hashchain/scoring.hpp"

namespace hashchain {

class SketchCache {
 public:
  explicit SketchCache(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ConfigError("cache capacity must be >= 1");
    index_.reserve(capacity);
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return index_.size(); }
  std::uint64_t evictions() const { return evictions_; }

  /// Membership test that does not touch recency.
  bool contains(const std::string& id) const { return index_.count(id) != 0; }

  /// Lookup; a hit becomes the most recently used entry.
  Sketch* find(const std::string& id) {
    auto it = index_.find(id);
    if (it == index_.end()) return nullptr;
    entries_.splice(entries_.begin(), entries_, it->second);
    return &*it->second;
  }

  /// Returns the cached sketch for `id`, inserting a zero sketch of length
  /// `dimension` on a miss (evicting the least recently used entry when full).
  Sketch& get_or_create(const std::string& id, std::size_t dimension, bool* created = nullptr) {
    if (Sketch* hit = find(id)) {
      if (created != nullptr) *created = false;
      return *hit;
    }
    if (index_.size() == capacity_) {
      index_.erase(entries_.back().id);
      entries_.pop_back();
      ++evictions_;
    }
    entries_.push_front(Sketch{id, std::vector<double>(dimension, 0.0), std::nullopt});
    index_.emplace(id, entries_.begin());
    if (created != nullptr) *created = true;
    return entries_.front();
  }

  /// Ids from most to least recently used.
  std::vector<std::string> recency_order() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& s : entries_) out.push_back(s.id);
    return out;
  }

 private:
  std::size_t capacity_;
  std::list<Sketch> entries_;
  std::unordered_map<std::string, std::list<Sketch>::iterator> index_;
  std::uint64_t evictions_ = 0;
};

class StreamScorer {
 public:
  StreamScorer(std::shared_ptr<const EnsembleModel> model, std::size_t cache_capacity)
      : model_(std::move(model)), projector_(model_->projector()), cache_(cache_capacity) {}

  /// Applies the triple to the id's sketch and rescores it. A triple that
  /// fails validation throws before the cache is touched.
  ScoreRecord process_update(const UpdateTriple& t) {
    t.validate();
    Sketch& s = cache_.get_or_create(t.id, projector_.dimension());
    projector_.apply(s, t);
    return ScoreRecord{t.id, score_point(s.values, *model_), std::nullopt};
  }

  const SketchCache& cache() const { return cache_; }
  const EnsembleModel& model() const { return *model_; }

 private:
  std::shared_ptr<const EnsembleModel> model_;
  HashProjector projector_;
  SketchCache cache_;
};

struct StreamStats {
  std::size_t lines = 0;
  std::size_t records = 0;
  std::size_t errors = 0;
};

/// Reads one triple per line and hands each resulting record to `sink`, in
/// input order. Lines that fail to parse are reported to `errors` (when
/// given) and skipped. Blank lines are ignored.
inline StreamStats run_stream(std::istream& in, StreamScorer& scorer,
                              const std::function<void(const ScoreRecord&)>& sink,
                              std::ostream* errors = nullptr) {
  StreamStats stats;
  std::string line;
  while (std::getline(in, line)) {
    ++stats.lines;
    if (io_detail::trim(line).empty()) continue;
    try {
      const auto record = scorer.process_update(parse_update(line));
      ++stats.records;
      sink(record);
    } catch (const DataError& e) {
      ++stats.errors;
      if (errors != nullptr) *errors << "line " << stats.lines << ": " << e.what() << '\n';
    }
  }
  return stats;
}

inline void write_stream_record(std::ostream& out, const ScoreRecord& r) {
  out << r.id << '\t' << format_real(r.score) << '\t' << format_real(r.outlierness()) << '\n';
}

}  // namespace hashchain
