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

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "hashchain/core.hpp"
#include "hashchain/hash.hpp"
#include "hashchain/io.hpp"
#include "support/files.hpp"

namespace hc = hashchain;
using hc::testing::TempDir;

TEST(SparsePoint, ZeroRemovesAndNonFiniteRejected) {
  hc::SparsePoint p("a");
  p.set_real("x", 2.0);
  p.set_real("y", 0.0);
  EXPECT_EQ(p.real_features().size(), 1u);
  p.set_real("x", 0.0);
  EXPECT_TRUE(p.empty());
  EXPECT_THROW(p.set_real("x", std::nan("")), hc::DataError);
  EXPECT_THROW(p.set_real("x", std::numeric_limits<double>::infinity()), hc::DataError);
}

TEST(SparsePoint, NameInAtMostOneMap) {
  hc::SparsePoint p("a");
  p.set_real("x", 1.0);
  EXPECT_THROW(p.set_categorical("x", "v"), hc::DataError);
  p.set_categorical("c", "v");
  EXPECT_THROW(p.set_real("c", 1.0), hc::DataError);
  EXPECT_THROW(p.set_real("bad:name", 1.0), hc::DataError);
  EXPECT_THROW(p.set_real("", 1.0), hc::DataError);
}

TEST(SparsePoint, FeaturesKeptSortedByName) {
  hc::SparsePoint p("a");
  for (const char* n : {"z", "b", "m", "a"}) p.set_real(n, 1.0);
  std::vector<std::string> names;
  for (const auto& [n, v] : p.real_features()) names.push_back(n);
  EXPECT_TRUE(std::is_sorted(names.begin(), names.end()));
  EXPECT_EQ(p.real("m"), 1.0);
  EXPECT_FALSE(p.real("q").has_value());
}

TEST(UpdateTriple, ValidationRules) {
  EXPECT_NO_THROW(hc::UpdateTriple::numeric("u", "f", 1.0).validate());
  EXPECT_THROW(hc::UpdateTriple::numeric("", "f", 1.0).validate(), hc::DataError);
  EXPECT_THROW(hc::UpdateTriple::numeric("u", "f", std::nan("")).validate(), hc::DataError);
  EXPECT_THROW(hc::UpdateTriple::numeric("u", "a:b", 1.0).validate(), hc::DataError);
  EXPECT_NO_THROW(hc::UpdateTriple::substitution("u", "c", std::nullopt, "red").validate());
}

TEST(Schema, RejectsDuplicatesAndSeparator) {
  using hc::ColumnRole;
  EXPECT_THROW(hc::DatasetSchema({{"a", ColumnRole::kReal}, {"a", ColumnRole::kReal}}),
               hc::ConfigError);
  EXPECT_THROW(hc::DatasetSchema({{"a:b", ColumnRole::kReal}}), hc::ConfigError);
  EXPECT_THROW(hc::DatasetSchema({{"i", ColumnRole::kId}, {"j", ColumnRole::kId}}),
               hc::ConfigError);
  const hc::DatasetSchema s({{"id", ColumnRole::kId}, {"a", ColumnRole::kReal},
                             {"c", ColumnRole::kCategorical}, {"label", ColumnRole::kLabel}});
  EXPECT_EQ(s.feature_names(), (std::vector<std::string>{"a", "c"}));
}

TEST(DenseCsv, HeaderAndZeroDrop) {
  std::istringstream in("f1,f2\n1.5,0.0\n");
  const auto pts = hc::parse_dense_csv_stream(in, hc::DatasetSchema::all_real({"f1", "f2"}), true);
  ASSERT_EQ(pts.size(), 1u);
  EXPECT_EQ(pts[0].real("f1"), 1.5);
  EXPECT_FALSE(pts[0].real("f2").has_value());
  EXPECT_EQ(pts[0].real_features().size(), 1u);
}

TEST(DenseCsv, SchemaDirectedCategorical) {
  std::istringstream in("a,2.0\n");
  const hc::DatasetSchema s({{"f1", hc::ColumnRole::kCategorical}, {"f2", hc::ColumnRole::kReal}});
  const auto pts = hc::parse_dense_csv_stream(in, s, false);
  ASSERT_EQ(pts.size(), 1u);
  EXPECT_EQ(pts[0].categorical("f1"), "a");
  EXPECT_EQ(pts[0].real("f2"), 2.0);
}

TEST(DenseCsv, RowIndicesBecomeIds) {
  TempDir dir;
  const auto path = dir.write("d.csv", "x\n1\n2\n3\n");
  const auto ds = hc::parse_dense_csv(path, hc::DatasetSchema::all_real({"x"}), true, 2);
  ASSERT_EQ(ds.size(), 3u);
  const auto pts = ds.collect();
  EXPECT_EQ(pts[0].id(), "0");
  EXPECT_EQ(pts[1].id(), "1");
  EXPECT_EQ(pts[2].id(), "2");
}

TEST(DenseCsv, ExplicitIdAndLabelColumns) {
  std::istringstream in("id,x,label\nabc,4,1\n");
  const hc::DatasetSchema s({{"id", hc::ColumnRole::kId}, {"x", hc::ColumnRole::kReal},
                             {"label", hc::ColumnRole::kLabel}});
  const auto pts = hc::parse_dense_csv_stream(in, s, true);
  ASSERT_EQ(pts.size(), 1u);
  EXPECT_EQ(pts[0].id(), "abc");
  EXPECT_EQ(pts[0].label(), 1);
  EXPECT_FALSE(pts[0].real("label").has_value());
}

TEST(DenseCsv, ErrorsNameTheLine) {
  const auto schema = hc::DatasetSchema::all_real({"a", "b"});
  std::istringstream arity("1,2\n3\n");
  try {
    hc::parse_dense_csv_stream(arity, schema, false);
    FAIL();
  } catch (const hc::DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  std::istringstream token("1,2\n3,abc\n");
  try {
    hc::parse_dense_csv_stream(token, schema, false);
    FAIL();
  } catch (const hc::DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("non-numeric"), std::string::npos);
  }
}

TEST(SparseKv, LineFormat) {
  const auto p = hc::parse_sparse_kv_line("1 3:0.5 7:1.0", "0");
  EXPECT_EQ(p.label(), 1);
  EXPECT_EQ(p.real("f3"), 0.5);
  EXPECT_EQ(p.real("f7"), 1.0);
  EXPECT_EQ(p.real_features().size(), 2u);

  const auto e = hc::parse_sparse_kv_line("0", "1");
  EXPECT_TRUE(e.empty());
  EXPECT_EQ(e.label(), 0);
}

TEST(SparseKv, Errors) {
  EXPECT_THROW(hc::parse_sparse_kv_line("1 3:0.5 3:1.0", "0"), hc::DataError);
  EXPECT_THROW(hc::parse_sparse_kv_line("1 3:abc", "0"), hc::DataError);
  EXPECT_THROW(hc::parse_sparse_kv_line("1 3", "0"), hc::DataError);
  EXPECT_THROW(hc::parse_sparse_kv_line("x 3:1", "0"), hc::DataError);
}

TEST(SparseKv, FileSizeIsLineCount) {
  TempDir dir;
  std::string body;
  for (int i = 0; i < 25; ++i) body += std::to_string(i % 2) + " " + std::to_string(i) + ":1\n";
  const auto ds = hc::parse_sparse_kv(dir.write("s.txt", body), 3);
  EXPECT_EQ(ds.size(), 25u);
}

// Property: sparse-kv serialization round-trips any real-only point.
TEST(SparseKv, RoundTripProperty) {
  hc::Rng rng(21);
  for (int trial = 0; trial < 500; ++trial) {
    hc::SparsePoint p("7");
    p.set_label(static_cast<int>(rng.below(2)));
    const auto nnz = rng.below(12);
    for (std::uint64_t j = 0; j < nnz; ++j) {
      p.set_real(hc::sparse_feature_name(static_cast<long long>(rng.below(1000))),
                 rng.normal(0.0, 1e3) * std::pow(10.0, rng.uniform(-8, 8)));
    }
    const auto line = hc::format_sparse_kv_line(p);
    EXPECT_EQ(hc::parse_sparse_kv_line(line, "7"), p) << line;
  }
}

// Property: parsed multiset does not depend on the partition count.
TEST(Parsing, PartitionCountInvariance) {
  TempDir dir;
  std::string body = "a,b\n";
  hc::Rng rng(5);
  for (int i = 0; i < 97; ++i) {
    body += hc::format_real(rng.normal()) + "," + hc::format_real(rng.normal()) + "\n";
  }
  const auto path = dir.write("p.csv", body);
  const auto schema = hc::DatasetSchema::all_real({"a", "b"});
  const auto base = hc::parse_dense_csv(path, schema, true, 1).collect();
  for (std::size_t parts : {2u, 7u, 16u, 200u}) {
    const auto ds = hc::parse_dense_csv(path, schema, true, parts);
    EXPECT_EQ(ds.collect(), base);
  }
}

TEST(ParseUpdate, AcceptedForms) {
  const auto a = hc::parse_update("u1,URL,+3");
  EXPECT_EQ(a, hc::UpdateTriple::numeric("u1", "URL", 3.0));
  const auto b = hc::parse_update("u2,loc,NYC:Austin");
  EXPECT_EQ(b, hc::UpdateTriple::substitution("u2", "loc", "NYC", "Austin"));
  const auto c = hc::parse_update("u3,color,:red");
  EXPECT_EQ(c.kind, hc::UpdateKind::kCategoricalSubstitution);
  EXPECT_FALSE(c.old_value.has_value());
  EXPECT_EQ(c.new_value, "red");
}

TEST(ParseUpdate, Errors) {
  EXPECT_THROW(hc::parse_update("u1,URL,abc"), hc::DataError);
  EXPECT_THROW(hc::parse_update("u1,URL"), hc::DataError);
  EXPECT_THROW(hc::parse_update(",URL,1"), hc::DataError);
  EXPECT_THROW(hc::parse_update("u1,URL,nan"), hc::DataError);
}

TEST(ParseUpdate, FormatRoundTrip) {
  for (const char* line : {"u1,URL,3", "u2,loc,NYC:Austin", "u3,color,:red", "x,y,-0.125"}) {
    const auto t = hc::parse_update(line);
    EXPECT_EQ(hc::parse_update(hc::format_update(t)), t);
  }
}

TEST(FormatReal, ShortestRoundTrip) {
  hc::Rng rng(8);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.normal() * std::pow(10.0, rng.uniform(-30, 30));
    EXPECT_EQ(hc::parse_real(hc::format_real(v)), v);
  }
}
