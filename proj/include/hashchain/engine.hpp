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

// In-process shared-nothing execution engine.
//
// A PartitionedDataset is an immutable collection split into partitions.
// Stages run one task per partition on a bounded pool of workers. A task
// sees only its own partition and any Broadcast values captured by the
// user function. The only cross-partition exchange is the shuffle inside
// reduce_by_key, which moves serialized records between partitions and
// accounts for every byte it moves.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <exception>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <type_traits>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hashchain/core.hpp"
#include "hashchain/hash.hpp"

namespace hashchain {

// ---------------------------------------------------------------------------
// Wire codec for shuffled records.

template <typename T, typename Enable = void>
struct Codec;

template <typename T>
struct Codec<T, std::enable_if_t<std::is_arithmetic_v<T>>> {
  static void encode(const T& v, std::string& out) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
  }
  static T decode(std::string_view& in) {
    if (in.size() < sizeof(T)) throw std::out_of_range("codec: truncated record");
    T v;
    std::memcpy(&v, in.data(), sizeof(T));
    in.remove_prefix(sizeof(T));
    return v;
  }
};

template <>
struct Codec<std::string> {
  static void encode(const std::string& v, std::string& out) {
    Codec<std::uint32_t>::encode(static_cast<std::uint32_t>(v.size()), out);
    out.append(v);
  }
  static std::string decode(std::string_view& in) {
    const auto n = Codec<std::uint32_t>::decode(in);
    if (in.size() < n) throw std::out_of_range("codec: truncated string");
    std::string v(in.substr(0, n));
    in.remove_prefix(n);
    return v;
  }
};

template <typename A, typename B>
struct Codec<std::pair<A, B>> {
  static void encode(const std::pair<A, B>& v, std::string& out) {
    Codec<A>::encode(v.first, out);
    Codec<B>::encode(v.second, out);
  }
  static std::pair<A, B> decode(std::string_view& in) {
    A a = Codec<A>::decode(in);
    B b = Codec<B>::decode(in);
    return {std::move(a), std::move(b)};
  }
};

namespace detail {

template <typename K, typename = void>
struct has_std_hash : std::false_type {};

template <typename K>
struct has_std_hash<K, std::void_t<decltype(std::hash<K>{}(std::declval<const K&>()))>>
    : std::true_type {};

}  // namespace detail

/// Hash used for in-memory grouping. Falls back to hashing the wire image for
/// key types without a std::hash specialization.
template <typename K>
struct KeyHash {
  std::size_t operator()(const K& k) const {
    if constexpr (detail::has_std_hash<K>::value) {
      return std::hash<K>{}(k);
    } else {
      std::string buf;
      Codec<K>::encode(k, buf);
      return static_cast<std::size_t>(xxh64(buf, 0));
    }
  }
};

// ---------------------------------------------------------------------------
// Errors and metrics.

/// A user function failed inside a stage. Carries the failing element's
/// coordinates and the original exception.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, std::size_t partition, std::size_t index,
             const std::string& what, std::exception_ptr cause)
      : std::runtime_error("stage '" + stage + "' failed at partition " +
                           std::to_string(partition) + ", element " +
                           std::to_string(index) + ": " + what),
        stage_(std::move(stage)),
        partition_(partition),
        index_(index),
        cause_(std::move(cause)) {}

  const std::string& stage() const { return stage_; }
  std::size_t partition() const { return partition_; }
  std::size_t index() const { return index_; }
  const std::exception_ptr& cause() const { return cause_; }

 private:
  std::string stage_;
  std::size_t partition_;
  std::size_t index_;
  std::exception_ptr cause_;
};

struct StageMetrics {
  std::uint64_t invocations = 0;
  std::uint64_t elements_in = 0;
  std::uint64_t elements_out = 0;
  /// Records produced by the map side of a shuffle, before pre-combining.
  std::uint64_t records_pre_combine = 0;
  /// Records that crossed partitions after pre-combining.
  std::uint64_t records_shuffled = 0;
  std::uint64_t bytes_shuffled = 0;
  double seconds = 0.0;

  StageMetrics& operator+=(const StageMetrics& o) {
    invocations += o.invocations;
    elements_in += o.elements_in;
    elements_out += o.elements_out;
    records_pre_combine += o.records_pre_combine;
    records_shuffled += o.records_shuffled;
    bytes_shuffled += o.bytes_shuffled;
    seconds += o.seconds;
    return *this;
  }
};

/// Thread-safe per-stage accumulator, keyed by stage name.
class EngineMetrics {
 public:
  void record(const std::string& stage, const StageMetrics& m) {
    std::lock_guard lock(mu_);
    stages_[stage] += m;
  }

  std::map<std::string, StageMetrics> snapshot() const {
    std::lock_guard lock(mu_);
    return stages_;
  }

  /// Sum over all stages whose name starts with `prefix`.
  StageMetrics total(std::string_view prefix = {}) const {
    std::lock_guard lock(mu_);
    StageMetrics sum;
    for (const auto& [name, m] : stages_) {
      if (name.starts_with(prefix)) sum += m;
    }
    return sum;
  }

  void clear() {
    std::lock_guard lock(mu_);
    stages_.clear();
  }

 private:
  mutable std::mutex mu_;
  std::map<std::string, StageMetrics> stages_;
};

// ---------------------------------------------------------------------------
// Data containers.

template <typename T>
class PartitionedDataset {
 public:
  using value_type = T;
  using Partitions = std::vector<std::vector<T>>;

  PartitionedDataset()
      : parts_(std::make_shared<const Partitions>(Partitions(1))) {}

  explicit PartitionedDataset(Partitions parts) {
    if (parts.empty()) parts.emplace_back();
    parts_ = std::make_shared<const Partitions>(std::move(parts));
  }

  /// Splits `items` into `partitions` contiguous runs of near-equal size.
  static PartitionedDataset from_vector(std::vector<T> items,
                                        std::size_t partitions) {
    if (partitions == 0) partitions = 1;
    Partitions parts(partitions);
    const std::size_t n = items.size();
    for (std::size_t p = 0; p < partitions; ++p) {
      const std::size_t lo = n * p / partitions;
      const std::size_t hi = n * (p + 1) / partitions;
      parts[p].reserve(hi - lo);
      for (std::size_t i = lo; i < hi; ++i) parts[p].push_back(std::move(items[i]));
    }
    return PartitionedDataset(std::move(parts));
  }

  std::size_t partition_count() const { return parts_->size(); }

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& p : *parts_) n += p.size();
    return n;
  }

  bool empty() const { return size() == 0; }

  /// Read access for stage tasks.
  std::span<const T> partition(std::size_t p) const { return (*parts_)[p]; }

  /// Elements in partition order.
  std::vector<T> collect() const {
    std::vector<T> out;
    out.reserve(size());
    for (const auto& p : *parts_) out.insert(out.end(), p.begin(), p.end());
    return out;
  }

  PartitionedDataset repartition(std::size_t partitions) const {
    return from_vector(collect(), partitions);
  }

 private:
  std::shared_ptr<const Partitions> parts_;
};

/// Read-only value shared with all workers.
template <typename T>
class Broadcast {
 public:
  explicit Broadcast(std::shared_ptr<const T> value) : value_(std::move(value)) {}
  const T& value() const { return *value_; }
  const T* operator->() const { return value_.get(); }

 private:
  std::shared_ptr<const T> value_;
};

// ---------------------------------------------------------------------------
// Worker pool.

/// Runs fn(i) for i in [0, n) on up to `threads` threads. If any call throws,
/// the exception of the lowest failing index is rethrown after all threads
/// join.
template <typename Fn>
void parallel_for(std::size_t threads, std::size_t n, Fn&& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const std::size_t count = std::min(threads, n);
    pool.reserve(count);
    for (std::size_t t = 0; t < count; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

namespace detail {

inline std::string describe(std::exception_ptr e) {
  try {
    std::rethrow_exception(e);
  } catch (const std::exception& ex) {
    return ex.what();
  } catch (...) {
    return "unknown error";
  }
}

/// Insertion-ordered grouping of (key, value) pairs under `combine`.
template <typename K, typename V, typename Combine>
class Combiner {
 public:
  explicit Combiner(const Combine& combine) : combine_(combine) {}

  void add(K key, V value) {
    auto [it, inserted] = index_.try_emplace(key, entries_.size());
    if (inserted) {
      entries_.emplace_back(std::move(key), std::move(value));
    } else {
      auto& slot = entries_[it->second].second;
      slot = combine_(slot, value);
    }
  }

  std::vector<std::pair<K, V>> take() { return std::move(entries_); }

 private:
  const Combine& combine_;
  std::unordered_map<K, std::size_t, KeyHash<K>> index_;
  std::vector<std::pair<K, V>> entries_;
};

}  // namespace detail

struct EngineOptions {
  /// Size of the worker pool.
  std::size_t workers = 1;
  /// Partition count used by parallelize(); 0 means workers * 4.
  std::size_t partitions = 0;
};

class Engine {
 public:
  explicit Engine(EngineOptions options = {}) : options_(options) {
    if (options_.workers == 0) options_.workers = 1;
    if (options_.partitions == 0) options_.partitions = options_.workers * 4;
  }

  std::size_t workers() const { return options_.workers; }
  std::size_t default_partitions() const { return options_.partitions; }

  EngineMetrics& metrics() const { return *metrics_; }

  template <typename T>
  PartitionedDataset<T> parallelize(std::vector<T> items) const {
    return PartitionedDataset<T>::from_vector(std::move(items),
                                              options_.partitions);
  }

  template <typename T>
  Broadcast<T> broadcast(T value) const {
    return Broadcast<T>(std::make_shared<const T>(std::move(value)));
  }

  /// Elementwise f(const T&) -> U. Partition structure is preserved.
  template <typename T, typename F>
  auto map(const PartitionedDataset<T>& ds, F f,
           const std::string& stage = "map") const
      -> PartitionedDataset<std::decay_t<std::invoke_result_t<F&, const T&>>> {
    using U = std::decay_t<std::invoke_result_t<F&, const T&>>;
    return map_partitions(
        ds,
        [&f](std::span<const T> part, auto&& on_index) {
          std::vector<U> out;
          out.reserve(part.size());
          for (std::size_t i = 0; i < part.size(); ++i) {
            on_index(i);
            out.push_back(f(part[i]));
          }
          return out;
        },
        stage);
  }

  /// f(const T&) -> range of U, outputs concatenated in element order.
  template <typename T, typename F>
  auto flat_map(const PartitionedDataset<T>& ds, F f,
                const std::string& stage = "flat_map") const {
    using R = std::decay_t<std::invoke_result_t<F&, const T&>>;
    using U = typename R::value_type;
    return map_partitions(
        ds,
        [&f](std::span<const T> part, auto&& on_index) {
          std::vector<U> out;
          for (std::size_t i = 0; i < part.size(); ++i) {
            on_index(i);
            for (auto&& u : f(part[i])) out.push_back(std::forward<decltype(u)>(u));
          }
          return out;
        },
        stage);
  }

  /// Whole-partition task. `task(span<const T>, on_index)` returns the output
  /// partition; it calls on_index(i) before working on element i so that a
  /// failure can be attributed to that element.
  template <typename T, typename Task>
  auto map_partitions(const PartitionedDataset<T>& ds, Task task,
                      const std::string& stage) const {
    using Out = std::decay_t<std::invoke_result_t<
        Task&, std::span<const T>, std::function<void(std::size_t)>&>>;
    using U = typename Out::value_type;
    const auto start = std::chrono::steady_clock::now();
    const std::size_t parts = ds.partition_count();
    std::vector<std::vector<U>> out(parts);
    parallel_for(options_.workers, parts, [&](std::size_t p) {
      std::size_t current = 0;
      std::function<void(std::size_t)> on_index = [&current](std::size_t i) {
        current = i;
      };
      try {
        out[p] = task(ds.partition(p), on_index);
      } catch (...) {
        auto e = std::current_exception();
        throw StageError(stage, p, current, detail::describe(e), e);
      }
    });
    PartitionedDataset<U> result(std::move(out));
    StageMetrics m;
    m.invocations = 1;
    m.elements_in = ds.size();
    m.elements_out = result.size();
    m.seconds = seconds_since(start);
    metrics_->record(stage, m);
    return result;
  }

  /// Groups pairs by key and folds values with an associative, commutative
  /// `combine`. Each partition pre-combines locally before the shuffle.
  template <typename K, typename V, typename Combine>
  PartitionedDataset<std::pair<K, V>> reduce_by_key(
      const PartitionedDataset<std::pair<K, V>>& ds, Combine combine,
      const std::string& stage = "reduce_by_key") const {
    return flat_map_reduce_by_key<K, V>(
        ds,
        [](const std::pair<K, V>& kv, auto&& emit) { emit(kv.first, kv.second); },
        combine, stage);
  }

  /// Fused flat_map + reduce_by_key: `f(const T&, emit)` calls emit(key,
  /// value) any number of times, and emitted pairs are pre-combined as they
  /// are produced instead of being materialized.
  template <typename K, typename V, typename T, typename F, typename Combine>
  PartitionedDataset<std::pair<K, V>> flat_map_reduce_by_key(
      const PartitionedDataset<T>& ds, F f, Combine combine,
      const std::string& stage) const {
    const auto start = std::chrono::steady_clock::now();
    const std::size_t parts = ds.partition_count();

    // Map side: emit, pre-combine, serialize into per-destination buffers.
    std::vector<std::vector<std::string>> outbox(parts,
                                                 std::vector<std::string>(parts));
    std::vector<std::uint64_t> emitted(parts, 0);
    std::vector<std::uint64_t> shuffled(parts, 0);
    parallel_for(options_.workers, parts, [&](std::size_t p) {
      detail::Combiner<K, V, Combine> local(combine);
      std::uint64_t count = 0;
      auto emit = [&](K key, V value) {
        ++count;
        local.add(std::move(key), std::move(value));
      };
      const auto part = ds.partition(p);
      std::size_t i = 0;
      try {
        for (; i < part.size(); ++i) f(part[i], emit);
      } catch (...) {
        auto e = std::current_exception();
        throw StageError(stage, p, i, detail::describe(e), e);
      }
      emitted[p] = count;
      auto records = local.take();
      shuffled[p] = records.size();
      std::string key_bytes;
      for (const auto& [key, value] : records) {
        key_bytes.clear();
        Codec<K>::encode(key, key_bytes);
        const std::size_t dest = xxh64(key_bytes, 0) % parts;
        auto& box = outbox[p][dest];
        box.append(key_bytes);
        Codec<V>::encode(value, box);
      }
    });

    // Reduce side: each destination merges its inbound buffers in source
    // partition order.
    std::vector<std::vector<std::pair<K, V>>> out(parts);
    parallel_for(options_.workers, parts, [&](std::size_t q) {
      detail::Combiner<K, V, Combine> merged(combine);
      for (std::size_t p = 0; p < parts; ++p) {
        std::string_view in = outbox[p][q];
        while (!in.empty()) {
          K key = Codec<K>::decode(in);
          V value = Codec<V>::decode(in);
          merged.add(std::move(key), std::move(value));
        }
      }
      out[q] = merged.take();
    });

    StageMetrics m;
    m.invocations = 1;
    m.elements_in = ds.size();
    for (std::size_t p = 0; p < parts; ++p) {
      m.records_pre_combine += emitted[p];
      m.records_shuffled += shuffled[p];
      for (const auto& box : outbox[p]) m.bytes_shuffled += box.size();
    }
    PartitionedDataset<std::pair<K, V>> result(std::move(out));
    m.elements_out = result.size();
    m.seconds = seconds_since(start);
    metrics_->record(stage, m);
    return result;
  }

  /// Gathers post-reduce pairs on the driver. Duplicate keys mean a reduce is
  /// missing and are rejected.
  template <typename K, typename V>
  std::unordered_map<K, V, KeyHash<K>> collect_as_map(
      const PartitionedDataset<std::pair<K, V>>& ds) const {
    std::unordered_map<K, V, KeyHash<K>> out;
    out.reserve(ds.size());
    for (std::size_t p = 0; p < ds.partition_count(); ++p) {
      for (const auto& [k, v] : ds.partition(p)) {
        if (!out.emplace(k, v).second) {
          throw std::logic_error(
              "collect_as_map: duplicate key (missing reduce_by_key?)");
        }
      }
    }
    return out;
  }

  /// Bernoulli(rate) sample keyed by (seed, id_of(element)), so membership
  /// does not depend on partitioning.
  template <typename T, typename IdOf>
  PartitionedDataset<T> sample(const PartitionedDataset<T>& ds, double rate,
                               std::uint64_t seed, IdOf id_of,
                               const std::string& stage = "sample") const {
    if (!(rate > 0.0 && rate <= 1.0)) {
      throw ConfigError("sample rate must be in (0, 1], got " +
                        std::to_string(rate));
    }
    if (rate == 1.0) return ds;
    return map_partitions(
        ds,
        [&](std::span<const T> part, auto&& on_index) {
          std::vector<T> out;
          for (std::size_t i = 0; i < part.size(); ++i) {
            on_index(i);
            if (sample_keep(id_of(part[i]), seed, rate)) out.push_back(part[i]);
          }
          return out;
        },
        stage);
  }

  static bool sample_keep(std::string_view id, std::uint64_t seed, double rate) {
    return unit_interval(xxh64(id, seed)) < rate;
  }

  /// Per-partition fold followed by a driver-side merge in partition order.
  template <typename T, typename Acc, typename Seq, typename Comb>
  Acc aggregate(const PartitionedDataset<T>& ds, Acc init, Seq seq, Comb comb,
                const std::string& stage = "aggregate") const {
    const auto start = std::chrono::steady_clock::now();
    const std::size_t parts = ds.partition_count();
    std::vector<Acc> partial(parts, init);
    parallel_for(options_.workers, parts, [&](std::size_t p) {
      const auto part = ds.partition(p);
      std::size_t i = 0;
      try {
        for (; i < part.size(); ++i) partial[p] = seq(std::move(partial[p]), part[i]);
      } catch (...) {
        auto e = std::current_exception();
        throw StageError(stage, p, i, detail::describe(e), e);
      }
    });
    Acc acc = std::move(init);
    for (auto& a : partial) acc = comb(std::move(acc), std::move(a));
    StageMetrics m;
    m.invocations = 1;
    m.elements_in = ds.size();
    m.seconds = seconds_since(start);
    metrics_->record(stage, m);
    return acc;
  }

 private:
  static double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  }

  EngineOptions options_;
  std::shared_ptr<EngineMetrics> metrics_ = std::make_shared<EngineMetrics>();
};

}  // namespace hashchain
