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

#include <cmath>
#include <string>
#include <vector>

#include "hashchain/chain.hpp"
#include "hashchain/model_io.hpp"
#include "support/files.hpp"
#include "support/oracles.hpp"

namespace hc = hashchain;

namespace {

std::vector<hc::Sketch> random_sketches(std::size_t n, std::size_t K, std::uint64_t seed,
                                        double scale = 1.0) {
  hc::Rng rng(seed);
  std::vector<hc::Sketch> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> v(K);
    for (auto& x : v) x = rng.normal(0.0, scale);
    out.push_back({std::to_string(i), std::move(v), std::nullopt});
  }
  return out;
}

hc::HalfSpaceChain shift_free(std::vector<double> delta, std::vector<std::uint32_t> features,
                              std::size_t r = 2, std::size_t w = 1000) {
  std::vector<hc::CountMinSketch> sketches;
  for (std::size_t l = 0; l < features.size(); ++l) {
    sketches.emplace_back(r, w, hc::CountMinSketch::derive_row_seeds(l, r));
  }
  std::vector<double> shifts(features.size(), 0.0);
  return hc::HalfSpaceChain(0, std::move(delta), std::move(features), std::move(shifts),
                            std::move(sketches));
}

std::vector<std::vector<std::int64_t>> components(const std::vector<hc::BinKey>& keys) {
  std::vector<std::vector<std::int64_t>> out;
  for (const auto& k : keys) out.push_back(k.components());
  return out;
}

}  // namespace

TEST(BinWidths, HalfRangeAndRepair) {
  hc::Engine engine;
  const std::vector<hc::Sketch> one{{"0", {3.0, -1.0}, std::nullopt}};
  EXPECT_EQ(hc::compute_bin_widths(engine, engine.parallelize(one)),
            (std::vector<double>{1.0, 1.0}));
  const std::vector<hc::Sketch> two{{"0", {-2.0, 5.0}, std::nullopt},
                                    {"1", {6.0, 5.0}, std::nullopt}};
  EXPECT_EQ(hc::compute_bin_widths(engine, engine.parallelize(two)),
            (std::vector<double>{4.0, 1.0}));
  EXPECT_THROW(hc::compute_bin_widths(engine, engine.parallelize(std::vector<hc::Sketch>{})),
               hc::DataError);
}

TEST(BinWidths, PartitionInvariant) {
  hc::Engine engine;
  const auto data = random_sketches(1000, 9, 1);
  const auto base =
      hc::compute_bin_widths(engine, hc::PartitionedDataset<hc::Sketch>::from_vector(data, 1));
  for (std::size_t p : {2u, 8u, 33u}) {
    EXPECT_EQ(hc::compute_bin_widths(engine,
                                     hc::PartitionedDataset<hc::Sketch>::from_vector(data, p)),
              base);
  }
}

TEST(InitChain, DeterministicAndInRange) {
  const std::vector<double> delta{0.5, 2.0, 7.0};
  const auto a = hc::HalfSpaceChain::init(42, delta, 20, 3, 11);
  const auto b = hc::HalfSpaceChain::init(42, delta, 20, 3, 11);
  EXPECT_EQ(a, b);
  EXPECT_NE(a.features(), hc::HalfSpaceChain::init(43, delta, 20, 3, 11).features());
  const auto single = hc::HalfSpaceChain::init(1, {3.0}, 50, 1, 1);
  for (auto f : single.features()) EXPECT_EQ(f, 0u);
}

TEST(InitChain, ShiftsStrictlyInsideOverManyDraws) {
  const std::vector<double> delta{1e-3, 1.0, 250.0, 1e6};
  std::size_t draws = 0;
  for (std::uint64_t seed = 0; draws < 10000; ++seed) {
    const auto c = hc::HalfSpaceChain::init(seed, delta, 100, 1, 1);
    for (std::size_t l = 0; l < c.depth(); ++l, ++draws) {
      const double eps = c.shifts()[l];
      EXPECT_GT(eps, 0.0);
      EXPECT_LT(eps, delta[c.features()[l]]);
    }
  }
}

TEST(InitChain, FeaturesRoughlyUniform) {
  std::vector<int> hist(5, 0);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto chain = hc::HalfSpaceChain::init(seed, std::vector<double>(5, 1.0), 50, 1, 1);
    for (auto f : chain.features()) ++hist[f];
  }
  for (int h : hist) EXPECT_NEAR(h, 2000, 5 * std::sqrt(2000.0));
}

TEST(InitChain, RowSeedsDeriveFromChainLevelRow) {
  const auto c = hc::HalfSpaceChain::init(9, {1.0, 1.0}, 3, 4, 10);
  for (std::size_t l = 0; l < 3; ++l) {
    for (std::size_t i = 0; i < 4; ++i) {
      EXPECT_EQ(c.sketch(l).row_seeds()[i], hc::hash_words({9, l, i}));
    }
  }
}

TEST(HalfSpaceChain, RejectsInvalidParameters) {
  std::vector<hc::CountMinSketch> one{hc::CountMinSketch(1, 1, {0})};
  EXPECT_THROW(hc::HalfSpaceChain(0, {1.0}, {0}, {1.0}, one), hc::ConfigError);   // shift = delta
  EXPECT_THROW(hc::HalfSpaceChain(0, {1.0}, {1}, {0.5}, one), hc::ConfigError);   // feature >= K
  EXPECT_THROW(hc::HalfSpaceChain(0, {0.0}, {0}, {0.0}, one), hc::ConfigError);   // delta = 0
  EXPECT_THROW(hc::HalfSpaceChain(0, {1.0}, {0, 0}, {0.5}, one), hc::ConfigError);  // lengths
}

TEST(BinIds, ShiftFreeWorkedExample) {
  const auto c = shift_free({2.0, 4.0}, {0, 0, 1});
  const std::vector<double> s{3.0, 5.0};
  EXPECT_EQ(components(c.bin_ids(s)),
            (std::vector<std::vector<std::int64_t>>{{1, 0}, {3, 0}, {3, 1}}));
}

TEST(BinIds, ZeroSketchGivesZeroKeys) {
  const auto c = shift_free({1.0, 2.0, 3.0}, {2, 0, 2, 1, 1});
  for (const auto& k : c.bin_ids(std::vector<double>(3, 0.0))) {
    EXPECT_EQ(k.components(), std::vector<std::int64_t>(3, 0));
  }
}

TEST(BinIds, LengthMismatchRejected) {
  const auto c = shift_free({1.0, 1.0}, {0});
  EXPECT_THROW(c.bin_ids(std::vector<double>{1.0}), hc::DataError);
}

// Property: keys equal the closed form of the halving law.
TEST(BinIds, HalvingLawProperty) {
  hc::Rng rng(3);
  for (std::uint64_t trial = 0; trial < 300; ++trial) {
    const std::size_t K = 1 + rng.below(6);
    std::vector<double> delta(K);
    for (auto& d : delta) d = rng.uniform(0.01, 5.0);
    const auto chain = hc::HalfSpaceChain::init(trial, delta, 1 + rng.below(25), 1, 1);
    std::vector<double> s(K);
    for (auto& x : s) x = rng.normal(0, 10);
    EXPECT_EQ(components(chain.bin_ids(s)), hc::oracle::closed_form_bins(s, chain));
  }
}

// Property: keys depend only on sampled components, when unsampled ones lie in [0, delta).
TEST(BinIds, SampledComponentsOnlyProperty) {
  hc::Rng rng(4);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t K = 6;
    std::vector<double> delta(K);
    for (auto& d : delta) d = rng.uniform(0.5, 3.0);
    const auto features = std::vector<std::uint32_t>{0, 2, 0, 2};
    const auto c = shift_free(delta, features);
    std::vector<double> a(K), b(K);
    for (std::size_t k = 0; k < K; ++k) {
      a[k] = rng.uniform(0.0, delta[k]);
      b[k] = rng.uniform(0.0, delta[k]);
    }
    b[0] = a[0] = rng.normal(0, 5);
    b[2] = a[2] = rng.normal(0, 5);
    EXPECT_EQ(c.bin_ids(a), c.bin_ids(b));
  }
}

TEST(FitChain, SinglePointEachLevelHoldsOneKey) {
  hc::Engine engine;
  const std::vector<hc::Sketch> one{{"p", {0.3, -0.2}, std::nullopt}};
  const auto chain = hc::HalfSpaceChain::init(5, {1.0, 1.0}, 2, 3, 100000);
  const auto fitted = hc::fit_chain(engine, engine.parallelize(one), chain, 1.0, 5);
  const auto keys = fitted.bin_ids(one[0].values);
  for (std::size_t l = 0; l < 2; ++l) {
    EXPECT_EQ(fitted.sketch(l).query(keys[l]), 1u);
    for (std::size_t i = 0; i < 3; ++i) {
      std::uint64_t total = 0;
      for (std::size_t c = 0; c < 100000; ++c) total += fitted.sketch(l).cell(i, c);
      EXPECT_EQ(total, 1u);
    }
  }
}

TEST(FitChain, IdenticalPointsShareABin) {
  hc::Engine engine({1, 3});
  std::vector<hc::Sketch> pts;
  for (int i = 0; i < 8; ++i) pts.push_back({std::to_string(i), {1.25, 0.5}, std::nullopt});
  const auto chain = hc::HalfSpaceChain::init(7, {2.0, 2.0}, 1, 4, 100000);
  const auto fitted = hc::fit_chain(engine, engine.parallelize(pts), chain, 1.0, 7);
  EXPECT_EQ(fitted.sketch(0).query(fitted.bin_ids(pts[0].values)[0]), 8u);
}

TEST(FitChain, PartitionInvariantCounts) {
  const auto data = random_sketches(3000, 5, 8);
  hc::Engine engine;
  const std::vector<double> delta(5, 0.7);
  const auto chain = hc::HalfSpaceChain::init(11, delta, 12, 4, 64);
  const auto base = hc::fit_chain(
      engine, hc::PartitionedDataset<hc::Sketch>::from_vector(data, 1), chain, 0.5, 3);
  for (std::size_t p : {4u, 16u}) {
    EXPECT_EQ(hc::fit_chain(engine, hc::PartitionedDataset<hc::Sketch>::from_vector(data, p),
                            chain, 0.5, 3),
              base);
  }
}

// Oracle: per-level counts equal an exact dictionary histogram.
TEST(FitChain, MatchesExactHistogram) {
  const auto data = random_sketches(2000, 4, 9);
  hc::Engine engine({1, 4});
  const auto ds = engine.parallelize(data);
  const auto delta = hc::compute_bin_widths(engine, ds);
  const auto chain = hc::HalfSpaceChain::init(13, delta, 10, 6, 200000);
  const auto fitted = hc::fit_chain(engine, ds, chain, 1.0, 13);
  std::vector<std::vector<double>> sample;
  for (const auto& s : data) sample.push_back(s.values);
  const hc::oracle::ExactHistogram exact(fitted, sample);
  for (std::size_t l = 0; l < fitted.depth(); ++l) {
    const auto isolated = hc::oracle::isolated_keys(fitted.sketch(l), exact.level(l));
    for (const auto& [key, n] : exact.level(l)) {
      const auto q = fitted.sketch(l).query(hc::BinKey::from(key));
      EXPECT_GE(q, n);
      if (isolated.at(key)) { EXPECT_EQ(q, n); }
    }
  }
}

TEST(FitChain, EmptySampleIsAnError) {
  hc::Engine engine;
  const std::vector<hc::Sketch> one{{"p", {0.0}, std::nullopt}};
  const auto chain = hc::HalfSpaceChain::init(1, {1.0}, 2, 1, 10);
  // Find a seed that drops the single point.
  std::uint64_t seed = 0;
  while (hc::Engine::sample_keep("p", seed, 0.01)) ++seed;
  EXPECT_THROW(hc::fit_chain(engine, engine.parallelize(one), chain, 0.01, seed), hc::DataError);
}

TEST(FitChain, OnePassPerLevelAccounting) {
  const auto data = random_sketches(5000, 3, 10);
  hc::Engine engine({1, 5});
  const auto chain = hc::HalfSpaceChain::init(2, {1.0, 1.0, 1.0}, 7, 3, 50);
  hc::fit_chain(engine, engine.parallelize(data), chain, 0.3, 99, "c");
  std::size_t sampled = 0;
  for (const auto& s : data) sampled += hc::Engine::sample_keep(s.id, 99, 0.3);
  EXPECT_EQ(engine.metrics().total("c").records_pre_combine, 7u * 3u * sampled);
}

TEST(Sampling, BernoulliWithinFiveSigma) {
  const std::size_t n = 100000;
  const double rho = 0.1;
  std::size_t kept = 0;
  for (std::size_t i = 0; i < n; ++i) kept += hc::Engine::sample_keep(std::to_string(i), 17, rho);
  const double sigma = std::sqrt(n * rho * (1 - rho));
  EXPECT_NEAR(static_cast<double>(kept), n * rho, 5 * sigma);
}

TEST(FitEnsemble, SingleChainEqualsFitChain) {
  const auto data = random_sketches(500, 4, 11);
  hc::Engine engine;
  const auto ds = engine.parallelize(data);
  const hc::HashProjector projector(4);
  hc::FitConfig cfg;
  cfg.chains = 1;
  cfg.depth = 6;
  cfg.cms_rows = 3;
  cfg.cms_cols = 40;
  cfg.sample_rate = 0.5;
  cfg.run_seed = 77;
  const auto model = hc::fit_ensemble(engine, ds, projector, cfg);
  const auto seed = hc::chain_seed(77, 0);
  const auto delta = hc::compute_bin_widths(engine, ds);
  const auto direct =
      hc::fit_chain(engine, ds, hc::HalfSpaceChain::init(seed, delta, 6, 3, 40), 0.5, seed);
  ASSERT_EQ(model.chains.size(), 1u);
  EXPECT_EQ(model.chains[0], direct);
  EXPECT_EQ(hc::chain_seed(77, 0), hc::hash_words({77, 0}));
}

TEST(FitEnsemble, ThreadCountDoesNotChangeModelBytes) {
  const auto data = random_sketches(2000, 6, 12);
  const hc::HashProjector projector(6);
  hc::FitConfig cfg;
  cfg.chains = 12;
  cfg.depth = 8;
  cfg.cms_rows = 4;
  cfg.cms_cols = 64;
  cfg.sample_rate = 0.3;
  cfg.run_seed = 5;
  std::string reference;
  for (std::size_t threads : {1u, 8u}) {
    for (std::size_t workers : {1u, 4u}) {
      hc::Engine engine({workers, 0});
      cfg.threads = threads;
      const auto bytes = hc::encode_model(
          hc::fit_ensemble(engine, engine.parallelize(data), projector, cfg));
      if (reference.empty()) reference = bytes;
      EXPECT_EQ(bytes, reference) << "threads " << threads << " workers " << workers;
    }
  }
  cfg.run_seed = 6;
  hc::Engine engine;
  EXPECT_NE(hc::encode_model(hc::fit_ensemble(engine, engine.parallelize(data), projector, cfg)),
            reference);
}

TEST(FitConfig, Validation) {
  hc::FitConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.sample_rate = 0.0;
  EXPECT_THROW(cfg.validate(), hc::ConfigError);
  cfg.sample_rate = 1.5;
  EXPECT_THROW(cfg.validate(), hc::ConfigError);
  cfg = {};
  cfg.cms_cols = 0;
  EXPECT_THROW(cfg.validate(), hc::ConfigError);
}

TEST(ModelFile, BitExactRoundTrip) {
  const auto data = random_sketches(400, 5, 13);
  hc::Engine engine;
  hc::FitConfig cfg;
  cfg.chains = 3;
  cfg.depth = 5;
  cfg.cms_rows = 2;
  cfg.cms_cols = 30;
  cfg.sample_rate = 0.7;
  cfg.run_seed = 123;
  const auto model = hc::fit_ensemble(engine, engine.parallelize(data), hc::HashProjector(5), cfg);
  const auto bytes = hc::encode_model(model);
  EXPECT_EQ(bytes.substr(0, 8), "HCHNMODL");
  const auto back = hc::decode_model(bytes);
  EXPECT_EQ(back, model);
  EXPECT_EQ(hc::encode_model(back), bytes);

  hc::testing::TempDir dir;
  hc::save_model(model, dir.file("m.bin"));
  EXPECT_EQ(hc::load_model(dir.file("m.bin")), model);
}

TEST(ModelFile, CorruptionDetected) {
  const auto data = random_sketches(50, 2, 14);
  hc::Engine engine;
  hc::FitConfig cfg;
  cfg.chains = 2;
  cfg.depth = 3;
  cfg.cms_rows = 2;
  cfg.cms_cols = 5;
  const auto bytes =
      hc::encode_model(hc::fit_ensemble(engine, engine.parallelize(data), hc::HashProjector(2), cfg));
  EXPECT_THROW(hc::decode_model("nonsense"), hc::DataError);
  EXPECT_THROW(hc::decode_model(bytes.substr(0, bytes.size() - 1)), hc::DataError);
  EXPECT_THROW(hc::decode_model(bytes + "x"), hc::DataError);
  std::string wrong_version = bytes;
  wrong_version[8] = 9;
  EXPECT_THROW(hc::decode_model(wrong_version), hc::DataError);
  EXPECT_THROW(hc::load_model("/nonexistent/model"), hc::DataError);
}
