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

#include "cli.hpp"

namespace hashchain::cli {

int cmd_gen(const GenOptions& o, std::ostream& err) {
  nlohmann::json side = {{"kind", o.kind}, {"seed", o.seed}, {"format", o.format}};
  bench::LabeledRows data;
  if (o.kind == "gmm") {
    std::vector<std::vector<double>> src;
    if (!o.source.path.empty()) {
      src = detail::load_dense_rows(o.source);
      if (src.empty()) throw DataError("mixture source has no rows");
      side["source"] = o.source.path;
    } else {
      src = bench::sample_source_inliers(o.source_n, o.dims, o.components, o.seed);
      side["source"] = "synthetic";
      side["source_n"] = o.source_n;
    }
    const auto spec = bench::fit_diag_gmm(src, o.components, o.em_iters, o.seed);
    auto b = bench::sample_gmm_benchmark(spec, o.n, o.outlier_frac, o.feature_frac,
                                         o.variance_factor, o.seed);
    side["n"] = o.n;
    side["dims"] = spec.dims();
    side["components"] = o.components;
    side["em_iters"] = o.em_iters;
    side["outlier_frac"] = o.outlier_frac;
    side["feature_frac"] = o.feature_frac;
    side["variance_factor"] = o.variance_factor;
    side["inflated_features"] = b.inflated_features;
    data = std::move(b.data);
  } else if (o.kind == "grid") {
    const auto in = bench::sample_clustered_2d(o.inliers, o.clusters, o.extent, o.spread, o.seed);
    auto b = bench::inject_grid_outliers(in, o.outliers, o.cell_size, hash_words({o.seed, 1}));
    side["inliers"] = o.inliers;
    side["outliers"] = o.outliers;
    side["clusters"] = o.clusters;
    side["extent"] = o.extent;
    side["spread"] = o.spread;
    side["cell_size"] = o.cell_size;
    side["markable_cells"] = b.markable_cells;
    data = b.rows();
  } else {
    throw ConfigError("unknown generator '" + o.kind + "'");
  }
  bench::write_labeled(o.output, data, o.format == "sparse");
  side["points"] = data.size();
  side["labelled_outliers"] = data.outliers();
  std::ofstream js(o.output + ".json");
  if (!js) throw ConfigError("cannot write sidecar '" + o.output + ".json'");
  js << side.dump(2) << '\n';
  err << "wrote " << data.size() << " points (" << data.outliers() << " outliers) to "
      << o.output << '\n';
  return kOk;
}

int cmd_fit(const FitOptions& o, std::ostream& out, std::ostream& err) {
  o.run.validate();
  detail::require_readable(o.run.input.path);
  const auto t0 = std::chrono::steady_clock::now();
  Engine engine(o.run.engine_options());
  const auto points = detail::load_points(o.run.input, engine.default_partitions());
  const double t_load = detail::seconds_since(t0);

  const auto t1 = std::chrono::steady_clock::now();
  const HashProjector projector(o.run.K);
  const auto sketches = project_dataset(engine, points, projector);
  const double t_project = detail::seconds_since(t1);

  const auto t2 = std::chrono::steady_clock::now();
  const auto model = fit_ensemble(engine, sketches, projector, o.run.fit_config());
  const double t_fit = detail::seconds_since(t2);
  save_model(model, o.model);

  nlohmann::json report = {
      {"points", points.size()},
      {"model", o.model},
      {"config",
       {{"K", o.run.K},
        {"M", o.run.M},
        {"L", o.run.L},
        {"r", o.run.r},
        {"w", o.run.w},
        {"sample_rate", o.run.sample_rate},
        {"seed", o.run.run_seed},
        {"threads", o.run.threads},
        {"partitions", engine.default_partitions()}}},
      {"seconds", {{"load", t_load}, {"project", t_project}, {"fit", t_fit}}},
      {"bytes_shuffled", engine.metrics().total("fit/").bytes_shuffled},
      {"records_pre_combine", engine.metrics().total("fit/").records_pre_combine},
  };
  if (!o.score_output.empty()) {
    const auto t3 = std::chrono::steady_clock::now();
    const auto records = score_ensemble(engine, sketches, model).collect();
    detail::write_scores(o.score_output, records, o.run.contamination, out);
    report["seconds"]["score"] = detail::seconds_since(t3);
  }
  report["engine"] = metrics_report(engine.metrics());
  if (!o.report.empty()) detail::write_json(o.report, report, out);
  err << "fitted " << model.chain_count() << " chains on " << points.size() << " points\n";
  return kOk;
}

int cmd_score(const ScoreOptions& o, std::ostream& out, std::ostream&) {
  o.run.validate();
  detail::require_readable(o.model);
  detail::require_readable(o.run.input.path);
  const auto model = load_model(o.model);
  if (o.k_given && model.dimension() != o.run.K) {
    throw ConfigError("model has K=" + std::to_string(model.dimension()) +
                      " but K=" + std::to_string(o.run.K) + " was requested");
  }
  Engine engine(o.run.engine_options());
  const auto points = detail::load_points(o.run.input, engine.default_partitions());
  const auto records = detail::score_points(engine, points, model);
  detail::write_scores(o.output, records, o.run.contamination, out);
  return kOk;
}

int cmd_eval(const EvalOptions& o, std::ostream& out, std::ostream&) {
  if (o.contamination && !(*o.contamination > 0.0 && *o.contamination < 1.0)) {
    throw ConfigError("contamination must be in (0, 1)");
  }
  const auto scores = detail::read_scores_tsv(o.scores);
  const auto points = detail::load_points(o.labels, 1).collect();
  if (points.size() != scores.ids.size()) {
    throw DataError("score file has " + std::to_string(scores.ids.size()) +
                    " rows but label file has " + std::to_string(points.size()));
  }
  std::vector<int> labels(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].id() != scores.ids[i]) {
      throw DataError("row " + std::to_string(i) + ": score id '" + scores.ids[i] +
                      "' does not match label id '" + points[i].id() + "'");
    }
    if (!points[i].label()) throw DataError("row " + std::to_string(i) + " has no label");
    labels[i] = *points[i].label() != 0 ? 1 : 0;
  }
  const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  const double contamination = o.contamination.value_or(
      static_cast<double>(positives) / static_cast<double>(std::max<std::size_t>(labels.size(), 1)));
  if (!(contamination > 0.0 && contamination < 1.0)) {
    throw DataError("labels must contain both classes");
  }
  const auto flags = rank_and_label(scores.records, contamination);
  const auto cm = bench::confusion(flags, labels);
  nlohmann::json j = {
      {"points", labels.size()},
      {"outliers", positives},
      {"contamination", contamination},
      {"auroc", bench::auroc(scores.outlierness, labels)},
      {"auprc", bench::auprc(scores.outlierness, labels)},
      {"f1", bench::f1(flags, labels)},
      {"precision", cm.precision()},
      {"recall", cm.recall()},
  };
  detail::write_json(o.output, j, out);
  return kOk;
}

int cmd_stream(const StreamOptions& o, std::istream& in, std::ostream& out,
               std::ostream& err) {
  detail::require_readable(o.model);
  auto model = std::make_shared<const EnsembleModel>(load_model(o.model));
  StreamScorer scorer(model, o.cache_size);
  std::ifstream file;
  std::istream* src = &in;
  if (o.input != "-") {
    detail::require_readable(o.input);
    file.open(o.input);
    src = &file;
  }
  detail::OutputTarget sink(o.output, out);
  const auto stats = run_stream(
      *src, scorer, [&](const ScoreRecord& r) { write_stream_record(sink.get(), r); }, &err);
  sink.get().flush();
  return stats.errors == 0 ? kOk : kData;
}

// ---------------------------------------------------------------------------

int classify(std::exception_ptr e, std::ostream& err) {
  try {
    std::rethrow_exception(e);
  } catch (const StageError& s) {
    err << "error: " << s.what() << '\n';
    if (s.cause()) {
      std::ostringstream sink;
      const int code = classify(s.cause(), sink);
      return code;
    }
    return kInternal;
  } catch (const ConfigError& c) {
    err << "error: " << c.what() << '\n';
    return kUsage;
  } catch (const DataError& d) {
    err << "error: " << d.what() << '\n';
    return kData;
  } catch (const std::exception& x) {
    err << "internal error: " << x.what() << '\n';
    return kInternal;
  } catch (...) {
    err << "internal error: unknown exception\n";
    return kInternal;
  }
}

int run_cli(std::vector<std::string> args, std::istream& in, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"hashchain: outlier detection with hashed projections and half-space chains",
               "hashchain"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "key = value file; command-line flags override it");
  app.config_formatter(std::make_shared<detail::SubcommandConfig>(&app));
  app.allow_config_extras(CLI::config_extras_mode::error);

  GenOptions gen;
  auto* g = app.add_subcommand("gen", "generate a labelled benchmark dataset");
  g->add_option("kind", gen.kind, "gmm | grid")->check(CLI::IsMember({"gmm", "grid"}))->required();
  g->add_option("-o,--output", gen.output, "dataset path (sidecar: PATH.json)")->required();
  g->add_option("--format", gen.format, "dense | sparse")
      ->check(CLI::IsMember({"dense", "sparse"}))
      ->capture_default_str();
  g->add_option("--seed", gen.seed, "generator seed")->capture_default_str();
  g->add_option("-n,--points", gen.n, "gmm: total points")->capture_default_str();
  g->add_option("--dims", gen.dims, "gmm: synthetic source dimension")->capture_default_str();
  g->add_option("--outlier-frac", gen.outlier_frac, "gmm: outlier fraction")
      ->capture_default_str();
  g->add_option("--feature-frac", gen.feature_frac, "gmm: fraction of inflated features")
      ->capture_default_str();
  g->add_option("--variance-factor", gen.variance_factor, "gmm: variance multiplier")
      ->capture_default_str();
  g->add_option("--components", gen.components, "gmm: mixture components")
      ->capture_default_str();
  g->add_option("--source-points", gen.source_n, "gmm: synthetic source size")
      ->capture_default_str();
  g->add_option("--em-iters", gen.em_iters, "gmm: EM iterations")->capture_default_str();
  g->add_option("--source", gen.source.path, "gmm: dense CSV of inliers to fit instead");
  g->add_option("--inliers", gen.inliers, "grid: inlier count")->capture_default_str();
  g->add_option("--outliers", gen.outliers, "grid: injected outliers")->capture_default_str();
  g->add_option("--clusters", gen.clusters, "grid: inlier clusters")->capture_default_str();
  g->add_option("--extent", gen.extent, "grid: cluster centre range")->capture_default_str();
  g->add_option("--spread", gen.spread, "grid: cluster scale")->capture_default_str();
  g->add_option("--cell-size", gen.cell_size, "grid: cell side")->capture_default_str();

  FitOptions fit;
  auto* f = app.add_subcommand("fit", "project a dataset and fit a chain ensemble");
  detail::add_input_options(f, fit.run.input);
  detail::add_model_options(f, fit.run);
  detail::add_run_options(f, fit.run);
  f->add_option("-m,--model", fit.model, "model output path")->required();
  f->add_option("--report", fit.report, "JSON fit report path ('-' for stdout)");
  f->add_option("--score-output", fit.score_output, "also score the input to this TSV");
  f->add_option("--contamination", fit.run.contamination, "flag this fraction as outliers");

  ScoreOptions score;
  auto* s = app.add_subcommand("score", "score a dataset with a fitted model");
  detail::add_input_options(s, score.run.input);
  auto* k_opt = s->add_option("-K,--proj-dim", score.run.K, "expected projection dimension");
  detail::add_run_options(s, score.run);
  s->add_option("-m,--model", score.model, "model file")->required();
  s->add_option("-o,--output", score.output, "score TSV path ('-' for stdout)")
      ->capture_default_str();
  s->add_option("--contamination", score.run.contamination, "flag this fraction as outliers");

  EvalOptions ev;
  auto* e = app.add_subcommand("eval", "compare scores against labels");
  e->add_option("-s,--scores", ev.scores, "score TSV")->required();
  e->add_option("-l,--labels", ev.labels.path, "labelled dataset file")->required();
  e->add_option("--format", ev.labels.format, "dense | sparse")
      ->check(CLI::IsMember({"dense", "sparse"}))
      ->capture_default_str();
  e->add_option("--header", ev.labels.header, "dense file starts with a header row")
      ->capture_default_str();
  e->add_option("--categorical", ev.labels.categorical, "categorical column names")
      ->delimiter(',');
  e->add_option("--id-column", ev.labels.id_column, "column holding point ids");
  e->add_option("--label-column", ev.labels.label_column, "column holding labels")
      ->capture_default_str();
  e->add_option("--contamination", ev.contamination,
                "fraction flagged for F1 (default: true outlier fraction)");
  e->add_option("-o,--output", ev.output, "metrics JSON path ('-' for stdout)");

  StreamOptions st;
  auto* t = app.add_subcommand("stream", "score a stream of update triples");
  t->add_option("-m,--model", st.model, "model file")->required();
  t->add_option("--cache-size", st.cache_size, "sketches kept in memory")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  t->add_option("-i,--input", st.input, "triple file ('-' for stdin)")->capture_default_str();
  t->add_option("-o,--output", st.output, "record output ('-' for stdout)")
      ->capture_default_str();

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& pe) {
    const int code = app.exit(pe, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (g->parsed()) return cmd_gen(gen, err);
    if (f->parsed()) return cmd_fit(fit, out, err);
    if (s->parsed()) {
      score.k_given = k_opt->count() > 0;
      return cmd_score(score, out, err);
    }
    if (e->parsed()) return cmd_eval(ev, out, err);
    if (t->parsed()) return cmd_stream(st, in, out, err);
  } catch (...) {
    return classify(std::current_exception(), err);
  }
  return kUsage;
}

}  // namespace hashchain::cli
