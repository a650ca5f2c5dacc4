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

#include <gtest/gtest.h>

#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "support/files.hpp"

namespace hc = hashchain;
using hc::testing::slurp;
using hc::testing::TempDir;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args, const std::string& stdin_text = "") {
  std::istringstream in(stdin_text);
  std::ostringstream out, err;
  Result r;
  r.code = hc::cli::run_cli(std::move(args), in, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

/// A small grid dataset written through the CLI.
std::string small_grid(const TempDir& dir, const std::string& name = "grid.csv") {
  const auto path = dir.file(name);
  const auto r = run({"gen", "grid", "-o", path, "--inliers", "3000", "--outliers", "30",
                      "--clusters", "4", "--extent", "3", "--seed", "5"});
  EXPECT_EQ(r.code, 0) << r.err;
  return path;
}

std::vector<std::string> fit_args(const std::string& input, const std::string& model) {
  return {"fit", "-i", input, "-m", model, "-K", "6", "-M", "8", "-L", "8", "-w", "200",
          "--seed", "3"};
}

}  // namespace

TEST(CliGen, SameSeedSameFiles) {
  TempDir dir;
  const auto a = small_grid(dir, "a.csv");
  const auto b = small_grid(dir, "b.csv");
  EXPECT_EQ(slurp(a), slurp(b));
  const auto side = nlohmann::json::parse(slurp(a + ".json"));
  EXPECT_EQ(side["labelled_outliers"], 30);
  EXPECT_EQ(side["points"], 3030);

  const auto g = dir.file("g.csv");
  const std::vector<std::string> gmm{"gen", "gmm", "-o", g, "-n", "500", "--dims", "20",
                                     "--source-points", "200", "--seed", "2"};
  ASSERT_EQ(run(gmm).code, 0);
  const auto first = slurp(g);
  ASSERT_EQ(run(gmm).code, 0);
  EXPECT_EQ(slurp(g), first);
  const auto gs = nlohmann::json::parse(slurp(g + ".json"));
  EXPECT_EQ(gs["labelled_outliers"], 50);
  EXPECT_EQ(gs["inflated_features"].size(), 2u);
}

TEST(CliGen, GridOutliersSitInEmptyNeighbourhoods) {
  TempDir dir;
  const auto path = small_grid(dir);
  hc::cli::InputSpec spec;
  spec.path = path;
  const auto rows = hc::cli::detail::load_dense_rows(spec);
  std::vector<hc::bench::Point2> inliers, outliers;
  std::istringstream csv(slurp(path));
  std::string line;
  std::getline(csv, line);
  ASSERT_EQ(line, "f1,f2,label");
  while (std::getline(csv, line)) {
    const auto c1 = line.find(',');
    const auto c2 = line.rfind(',');
    const hc::bench::Point2 p{*hc::parse_real(line.substr(0, c1)),
                              *hc::parse_real(line.substr(c1 + 1, c2 - c1 - 1))};
    (line.substr(c2 + 1) == "1" ? outliers : inliers).push_back(p);
  }
  ASSERT_EQ(outliers.size(), 30u);
  EXPECT_EQ(rows.size(), 3030u);
  // An outlier's cell and its 8 neighbours hold no inlier, so every inlier
  // is at least one cell side (0.1) away along some axis.
  for (const auto& o : outliers) {
    for (const auto& p : inliers) {
      EXPECT_GE(std::max(std::abs(p.x - o.x), std::abs(p.y - o.y)), 0.1);
    }
  }
}

TEST(CliFit, DeterministicAcrossRunsAndThreads) {
  TempDir dir;
  const auto data = small_grid(dir);
  auto a = fit_args(data, dir.file("a.model"));
  auto b = fit_args(data, dir.file("b.model"));
  auto c = fit_args(data, dir.file("c.model"));
  c.insert(c.end(), {"--threads", "8", "--partitions", "5"});
  ASSERT_EQ(run(a).code, 0);
  ASSERT_EQ(run(b).code, 0);
  ASSERT_EQ(run(c).code, 0);
  EXPECT_EQ(slurp(dir.file("a.model")), slurp(dir.file("b.model")));
  EXPECT_EQ(slurp(dir.file("a.model")), slurp(dir.file("c.model")));
}

TEST(CliFit, ReportCountsShuffledRecords) {
  TempDir dir;
  const auto data = small_grid(dir);
  auto args = fit_args(data, dir.file("m"));
  args.insert(args.end(), {"--report", dir.file("r.json"), "-r", "3"});
  ASSERT_EQ(run(args).code, 0);
  const auto report = nlohmann::json::parse(slurp(dir.file("r.json")));
  EXPECT_EQ(report["points"], 3030);
  EXPECT_EQ(report["records_pre_combine"].get<std::uint64_t>(), 8u * 3u * 8u * 3030u);
  EXPECT_GT(report["bytes_shuffled"].get<std::uint64_t>(), 0u);
}

TEST(CliScore, MatchesOneShotPipelineAndIsIdempotent) {
  TempDir dir;
  const auto data = small_grid(dir);
  auto args = fit_args(data, dir.file("m"));
  args.insert(args.end(), {"--score-output", dir.file("oneshot.tsv")});
  ASSERT_EQ(run(args).code, 0);
  ASSERT_EQ(run({"score", "-i", data, "-m", dir.file("m"), "-o", dir.file("s1.tsv")}).code, 0);
  ASSERT_EQ(run({"score", "-i", data, "-m", dir.file("m"), "-o", dir.file("s2.tsv"),
                 "--threads", "4"})
                .code,
            0);
  EXPECT_EQ(slurp(dir.file("s1.tsv")), slurp(dir.file("oneshot.tsv")));
  EXPECT_EQ(slurp(dir.file("s1.tsv")), slurp(dir.file("s2.tsv")));
  const auto to_stdout = run({"score", "-i", data, "-m", dir.file("m")});
  EXPECT_EQ(to_stdout.out, slurp(dir.file("s1.tsv")));
}

TEST(CliScore, EmptyInputGivesHeaderOnly) {
  TempDir dir;
  const auto data = small_grid(dir);
  ASSERT_EQ(run(fit_args(data, dir.file("m"))).code, 0);
  const auto empty = dir.write("empty.csv", "f1,f2,label\n");
  const auto r = run({"score", "-i", empty, "-m", dir.file("m")});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "id\tscore\toutlierness\n");
}

TEST(CliScore, ProjectionDimensionMismatchIsUsageError) {
  TempDir dir;
  const auto data = small_grid(dir);
  ASSERT_EQ(run(fit_args(data, dir.file("m"))).code, 0);
  const auto r = run({"score", "-i", data, "-m", dir.file("m"), "-K", "7"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("K=6"), std::string::npos);
  EXPECT_EQ(run({"score", "-i", data, "-m", dir.file("m"), "-K", "6"}).code, 0);
}

TEST(CliEval, MatchesLibraryMetrics) {
  TempDir dir;
  const auto data = small_grid(dir);
  auto args = fit_args(data, dir.file("m"));
  args.insert(args.end(), {"--score-output", dir.file("s.tsv")});
  ASSERT_EQ(run(args).code, 0);
  const auto r = run({"eval", "-s", dir.file("s.tsv"), "-l", data});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto metrics = nlohmann::json::parse(r.out);

  const auto scores = hc::cli::detail::read_scores_tsv(dir.file("s.tsv"));
  std::vector<int> labels(3000, 0);
  labels.resize(3030, 1);
  EXPECT_DOUBLE_EQ(metrics["auroc"].get<double>(), hc::bench::auroc(scores.outlierness, labels));
  EXPECT_DOUBLE_EQ(metrics["auprc"].get<double>(), hc::bench::auprc(scores.outlierness, labels));
  const auto flags = hc::rank_and_label(scores.records, 30.0 / 3030.0);
  EXPECT_DOUBLE_EQ(metrics["f1"].get<double>(), hc::bench::f1(flags, labels));
  EXPECT_EQ(metrics["outliers"], 30);
  EXPECT_GT(metrics["auroc"].get<double>(), 0.9);
}

TEST(CliEval, PerfectScoresGiveOnes) {
  TempDir dir;
  const auto labels = dir.write("l.csv", "x,label\n1,0\n2,1\n3,0\n4,1\n");
  const auto scores =
      dir.write("s.tsv", "id\tscore\toutlierness\n0\t9\t-9\n1\t1\t-1\n2\t8\t-8\n3\t2\t-2\n");
  const auto r = run({"eval", "-s", scores, "-l", labels});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto m = nlohmann::json::parse(r.out);
  for (const char* key : {"auroc", "auprc", "f1", "precision", "recall"}) {
    EXPECT_DOUBLE_EQ(m[key].get<double>(), 1.0) << key;
  }
}

TEST(CliEval, MismatchedRowsIsDataError) {
  TempDir dir;
  const auto labels = dir.write("l.csv", "x,label\n1,0\n2,1\n3,0\n");
  const auto scores = dir.write("s.tsv", "id\tscore\toutlierness\n0\t9\t-9\n1\t1\t-1\n");
  const auto r = run({"eval", "-s", scores, "-l", labels});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("rows"), std::string::npos);
}

TEST(CliStream, ScoresTriplesAndReportsBadLines) {
  TempDir dir;
  const auto data = small_grid(dir);
  ASSERT_EQ(run(fit_args(data, dir.file("m"))).code, 0);
  const auto ok = run({"stream", "-m", dir.file("m"), "--cache-size", "2"},
                      "a,f1,1.5\na,f2,2\nb,f1,0.1\n");
  EXPECT_EQ(ok.code, 0) << ok.err;
  std::istringstream lines(ok.out);
  std::string line;
  std::vector<std::string> ids;
  while (std::getline(lines, line)) ids.push_back(line.substr(0, line.find('\t')));
  EXPECT_EQ(ids, (std::vector<std::string>{"a", "a", "b"}));

  // The second record of `a` equals batch scoring of the point (1.5, 2).
  const auto model = hc::load_model(dir.file("m"));
  hc::SparsePoint p("a");
  p.set_real("f1", 1.5);
  p.set_real("f2", 2.0);
  std::ostringstream expect;
  hc::write_stream_record(
      expect, {"a", hc::score_point(model.projector().project(p).values, model), std::nullopt});
  std::istringstream again(ok.out);
  std::getline(again, line);
  std::getline(again, line);
  EXPECT_EQ(line + "\n", expect.str());

  const auto bad = run({"stream", "-m", dir.file("m")}, "a,f1,1\nnot a triple\nb,f1,2\n");
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("line 2"), std::string::npos);
  EXPECT_EQ(std::count(bad.out.begin(), bad.out.end(), '\n'), 2);
}

TEST(CliConfig, FileValuesAndFlagPrecedence) {
  TempDir dir;
  const auto data = small_grid(dir);
  const auto cfg = dir.write("fit.ini", "proj-dim = 5\nchains = 3\ndepth = 4\ncms-cols = 50\n");
  ASSERT_EQ(run({"--config", cfg, "fit", "-i", data, "-m", dir.file("a")}).code, 0);
  EXPECT_EQ(hc::load_model(dir.file("a")).dimension(), 5u);
  EXPECT_EQ(hc::load_model(dir.file("a")).chain_count(), 3u);
  ASSERT_EQ(run({"--config", cfg, "fit", "-i", data, "-m", dir.file("b"), "-K", "9"}).code, 0);
  const auto b = hc::load_model(dir.file("b"));
  EXPECT_EQ(b.dimension(), 9u);
  EXPECT_EQ(b.chain_count(), 3u);

  const auto bogus = dir.write("bad.ini", "bogus = 1\n");
  EXPECT_EQ(run({"--config", bogus, "fit", "-i", data, "-m", dir.file("c")}).code, 1);
}

TEST(CliErrors, ExitCodes) {
  TempDir dir;
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  const auto missing = run({"fit", "-i", dir.file("nope.csv"), "-m", dir.file("m")});
  EXPECT_EQ(missing.code, 1);
  EXPECT_FALSE(missing.err.empty());
  EXPECT_EQ(run({"fit", "-i", dir.write("x.csv", "a\n1\n"), "-m", dir.file("m"), "-M", "0"}).code,
            1);
  const auto malformed = dir.write("bad.csv", "a,b\n1,2\n3,oops\n");
  const auto r = run({"fit", "-i", malformed, "-m", dir.file("m")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("line 3"), std::string::npos);
  const auto corrupt = dir.write("corrupt.model", "HCHNMODL-not-really");
  EXPECT_EQ(run({"score", "-i", dir.write("y.csv", "a\n1\n"), "-m", corrupt}).code, 2);
  EXPECT_EQ(run({"--help"}).code, 0);
}
