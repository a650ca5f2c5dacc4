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

// The `hashchain` command line: gen, fit, score, eval and stream.
//
// Every subcommand accepts --config FILE with one `key = value` per line,
// keys being long option names. Command-line flags win over the file, and
// the file wins over built-in defaults.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hashchain/bench/dataset.hpp"
#include "hashchain/bench/gmm.hpp"
#include "hashchain/bench/grid.hpp"
#include "hashchain/bench/metrics.hpp"
#include "hashchain/hashchain.hpp"
#include "hashchain/report.hpp"

namespace hashchain::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kInternal = 3 };

/// Where and how to read a point file.
struct InputSpec {
  std::string path;
  std::string format = "dense";  // dense | sparse
  bool header = true;
  std::vector<std::string> categorical;
  std::string id_column;
  std::string label_column = "label";
};

/// All user knobs of fit/score.
struct RunConfig {
  std::size_t K = 50;
  std::size_t M = 100;
  std::size_t L = 20;
  std::size_t r = 10;
  std::size_t w = 100;
  double sample_rate = 1.0;
  std::optional<double> contamination;
  std::uint64_t run_seed = 0;
  std::size_t threads = 1;
  std::size_t partitions = 0;
  InputSpec input;

  void validate() const {
    if (K == 0 || M == 0 || L == 0 || r == 0 || w == 0) {
      throw ConfigError("K, M, L, r and w must all be >= 1");
    }
    if (!(sample_rate > 0.0 && sample_rate <= 1.0)) {
      throw ConfigError("sample rate must be in (0, 1]");
    }
    if (contamination && !(*contamination > 0.0 && *contamination < 1.0)) {
      throw ConfigError("contamination must be in (0, 1)");
    }
    if (threads == 0) throw ConfigError("threads must be >= 1");
    if (input.format != "dense" && input.format != "sparse") {
      throw ConfigError("unknown input format '" + input.format + "'");
    }
  }

  EngineOptions engine_options() const { return {threads, partitions}; }

  FitConfig fit_config() const {
    FitConfig fc;
    fc.chains = M;
    fc.depth = L;
    fc.cms_rows = r;
    fc.cms_cols = w;
    fc.sample_rate = sample_rate;
    fc.run_seed = run_seed;
    fc.threads = threads;
    return fc;
  }
};

namespace detail {

inline void require_readable(const std::string& path) {
  std::ifstream probe(path);
  if (!probe) throw ConfigError("cannot open input '" + path + "'");
}

/// Loads points per `spec`. Dense files without a header get columns c1..cn.
inline PartitionedDataset<SparsePoint> load_points(const InputSpec& spec,
                                                   std::size_t partitions) {
  require_readable(spec.path);
  if (spec.format == "sparse") return parse_sparse_kv(spec.path, partitions);

  std::vector<std::string> names = read_csv_header(spec.path);
  if (!spec.header) {
    for (std::size_t c = 0; c < names.size(); ++c) names[c] = "c" + std::to_string(c + 1);
  }
  const std::set<std::string> present(names.begin(), names.end());
  for (const auto& c : spec.categorical) {
    if (!present.count(c)) throw ConfigError("categorical column '" + c + "' not in input");
  }
  if (!spec.id_column.empty() && !present.count(spec.id_column)) {
    throw ConfigError("id column '" + spec.id_column + "' not in input");
  }
  const std::set<std::string> categorical(spec.categorical.begin(), spec.categorical.end());
  std::vector<ColumnSpec> cols;
  for (const auto& n : names) {
    ColumnRole role = ColumnRole::kReal;
    if (n == spec.id_column) {
      role = ColumnRole::kId;
    } else if (!spec.label_column.empty() && n == spec.label_column) {
      role = ColumnRole::kLabel;
    } else if (categorical.count(n)) {
      role = ColumnRole::kCategorical;
    }
    cols.push_back({n, role});
  }
  return parse_dense_csv(spec.path, DatasetSchema(std::move(cols)), spec.header, partitions);
}

/// "-" means the given fallback stream.
class OutputTarget {
 public:
  OutputTarget(const std::string& path, std::ostream& fallback) {
    if (path.empty() || path == "-") {
      stream_ = &fallback;
    } else {
      file_.open(path, std::ios::binary);
      if (!file_) throw ConfigError("cannot open output '" + path + "'");
      stream_ = &file_;
    }
  }
  std::ostream& get() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline void write_json(const std::string& path, const nlohmann::json& j, std::ostream& fallback) {
  OutputTarget out(path, fallback);
  out.get() << j.dump(2) << '\n';
}

inline void add_input_options(CLI::App* app, InputSpec& in, bool required_path = true) {
  auto* opt = app->add_option("-i,--input", in.path, "point file");
  if (required_path) opt->required();
  app->add_option("--format", in.format, "dense | sparse")
      ->check(CLI::IsMember({"dense", "sparse"}))
      ->capture_default_str();
  app->add_option("--header", in.header, "dense file starts with a header row")
      ->capture_default_str();
  app->add_option("--categorical", in.categorical, "categorical column names")->delimiter(',');
  app->add_option("--id-column", in.id_column, "column holding point ids");
  app->add_option("--label-column", in.label_column,
                  "column holding ground-truth labels (ignored if absent)")
      ->capture_default_str();
}

inline void add_model_options(CLI::App* app, RunConfig& c) {
  app->add_option("-K,--proj-dim", c.K, "projection dimension")->capture_default_str();
  app->add_option("-M,--chains", c.M, "number of chains")->capture_default_str();
  app->add_option("-L,--depth", c.L, "levels per chain")->capture_default_str();
  app->add_option("-r,--cms-rows", c.r, "count-min rows")->capture_default_str();
  app->add_option("-w,--cms-cols", c.w, "count-min columns")->capture_default_str();
  app->add_option("--sample-rate", c.sample_rate, "per-chain sampling rate in (0, 1]")
      ->capture_default_str();
}

inline void add_run_options(CLI::App* app, RunConfig& c) {
  app->add_option("--seed", c.run_seed, "run seed")->capture_default_str();
  app->add_option("--threads", c.threads, "worker threads")->capture_default_str();
  app->add_option("--partitions", c.partitions, "data partitions (0: 4 per thread)")
      ->capture_default_str();
}

/// Reads `key = value` lines and files unsectioned keys under the
/// subcommand being run, so a config file never needs `[fit]` headers.
class SubcommandConfig : public CLI::ConfigBase {
 public:
  explicit SubcommandConfig(const CLI::App* root) : root_(root) {}

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    auto items = CLI::ConfigBase::from_config(input);
    const auto selected = root_->get_subcommands();
    if (selected.empty()) return items;
    for (auto& item : items) {
      if (item.parents.empty()) item.parents = {selected.front()->get_name()};
    }
    return items;
  }

 private:
  const CLI::App* root_;
};

inline std::vector<ScoreRecord> score_points(const Engine& engine,
                                             const PartitionedDataset<SparsePoint>& points,
                                             const EnsembleModel& model) {
  const auto sketches = project_dataset(engine, points, model.projector());
  return score_ensemble(engine, sketches, model).collect();
}

inline void write_scores(const std::string& path, const std::vector<ScoreRecord>& records,
                         std::optional<double> contamination, std::ostream& fallback) {
  OutputTarget out(path, fallback);
  if (contamination && !records.empty()) {
    const auto flags = rank_and_label(records, *contamination);
    write_scores_tsv(out.get(), records, &flags);
  } else {
    write_scores_tsv(out.get(), records);
  }
}

struct ScoreFile {
  std::vector<std::string> ids;
  std::vector<double> outlierness;
  std::vector<ScoreRecord> records;
};

inline ScoreFile read_scores_tsv(const std::string& path) {
  require_readable(path);
  std::ifstream in(path);
  ScoreFile f;
  std::string line;
  std::size_t line_no = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (io_detail::trim(line).empty()) continue;
    const auto fields = io_detail::split(line, '\t');
    if (header) {
      header = false;
      if (fields.size() < 3 || fields[0] != "id" || fields[1] != "score") {
        throw DataError(path + ": not a score file (bad header)");
      }
      continue;
    }
    if (fields.size() < 3) throw DataError(path + ": line " + std::to_string(line_no) +
                                           ": expected at least 3 fields");
    const auto score = parse_real(fields[1]);
    const auto outl = parse_real(fields[2]);
    if (!score || !outl) {
      throw DataError(path + ": line " + std::to_string(line_no) + ": bad score value");
    }
    f.ids.emplace_back(fields[0]);
    f.outlierness.push_back(*outl);
    f.records.push_back(ScoreRecord{std::string(fields[0]), *score, std::nullopt});
  }
  return f;
}

/// Copies of the rows of a dense all-real file, for fitting a mixture.
inline std::vector<std::vector<double>> load_dense_rows(const InputSpec& spec) {
  const auto points = load_points(spec, 1).collect();
  std::vector<std::string> names;
  {
    std::vector<std::string> header = read_csv_header(spec.path);
    for (std::size_t c = 0; c < header.size(); ++c) {
      const std::string n = spec.header ? header[c] : "c" + std::to_string(c + 1);
      if (n != spec.label_column && n != spec.id_column) names.push_back(n);
    }
  }
  std::vector<std::vector<double>> rows;
  rows.reserve(points.size());
  for (const auto& p : points) {
    if (!p.cat_features().empty()) throw DataError("mixture source must be all-real");
    std::vector<double> row(names.size(), 0.0);
    for (std::size_t j = 0; j < names.size(); ++j) row[j] = p.real(names[j]).value_or(0.0);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace detail

// ---------------------------------------------------------------------------

struct GenOptions {
  std::string kind = "gmm";
  std::string output;
  std::string format = "dense";
  std::uint64_t seed = 0;
  // gmm
  std::size_t n = 40000;
  std::size_t dims = 500;
  double outlier_frac = 0.1;
  double feature_frac = 0.1;
  double variance_factor = 5.0;
  std::size_t components = 2;
  std::size_t source_n = 3500;
  std::size_t em_iters = 20;
  InputSpec source;
  // grid
  std::size_t inliers = 1000000;
  std::size_t outliers = 1000;
  std::size_t clusters = 20;
  double extent = 10.0;
  double spread = 0.3;
  double cell_size = 0.1;
};

struct FitOptions {
  RunConfig run;
  std::string model;
  std::string report;
  std::string score_output;
};

struct ScoreOptions {
  RunConfig run;
  bool k_given = false;
  std::string model;
  std::string output;
};

struct EvalOptions {
  std::string scores;
  InputSpec labels;
  std::optional<double> contamination;
  std::string output;
};

struct StreamOptions {
  std::string model;
  std::size_t cache_size = 100000;
  std::string input = "-";
  std::string output = "-";
};

/// Subcommand entry points; each returns an ExitCode.
int cmd_gen(const GenOptions& o, std::ostream& err);
int cmd_fit(const FitOptions& o, std::ostream& out, std::ostream& err);
int cmd_score(const ScoreOptions& o, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalOptions& o, std::ostream& out, std::ostream& err);
int cmd_stream(const StreamOptions& o, std::istream& in, std::ostream& out, std::ostream& err);

/// Maps an in-flight exception to an exit code, printing its message to `err`.
int classify(std::exception_ptr e, std::ostream& err);

/// Runs the command line `args` (without the program name).
int run_cli(std::vector<std::string> args, std::istream& in, std::ostream& out,
            std::ostream& err);

}  // namespace hashchain::cli
