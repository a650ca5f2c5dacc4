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

// Binary model file, all integers little-endian, reals as IEEE-754 bits:
//
//   "HCHNMODL"  u32 version
//   u64 K, L, M, r, w, run_seed   f64 sample_rate
//   K x u64 projector seeds       K x f64 bin widths
//   M x { u64 chain seed, L x u32 feature, L x f64 shift, L x sketch }
//
// where a sketch is u64 r, u64 w, r x u64 row seeds, r*w x u64 counters.

#include <fstream>
#include <iterator>
#include <string>
#include <string_view>

#include "hashchain/chain.hpp"
#include "hashchain/cms.hpp"

namespace hashchain {

inline constexpr std::string_view kModelMagic = "HCHNMODL";
inline constexpr std::uint32_t kModelVersion = 1;

inline std::string encode_model(const EnsembleModel& model) {
  std::string out(kModelMagic);
  wire::put_u32(out, kModelVersion);
  const std::size_t dim = model.dimension();
  wire::put_u64(out, dim);
  wire::put_u64(out, model.depth);
  wire::put_u64(out, model.chain_count());
  wire::put_u64(out, model.cms_rows);
  wire::put_u64(out, model.cms_cols);
  wire::put_u64(out, model.run_seed);
  wire::put_f64(out, model.sample_rate);
  for (auto s : model.projector_seeds) wire::put_u64(out, s);
  for (auto d : model.delta) wire::put_f64(out, d);
  for (const auto& chain : model.chains) {
    wire::put_u64(out, chain.seed());
    for (auto f : chain.features()) wire::put_u32(out, f);
    for (auto e : chain.shifts()) wire::put_f64(out, e);
    for (const auto& cms : chain.sketches()) cms.serialize(out);
  }
  return out;
}

inline EnsembleModel decode_model(std::string_view in) {
  if (!in.starts_with(kModelMagic)) throw DataError("not a model file (bad magic)");
  in.remove_prefix(kModelMagic.size());
  const auto version = wire::get_u32(in);
  if (version != kModelVersion) {
    throw DataError("unsupported model version " + std::to_string(version));
  }
  EnsembleModel model;
  const auto dim = wire::get_u64(in);
  model.depth = wire::get_u64(in);
  const auto chains = wire::get_u64(in);
  model.cms_rows = wire::get_u64(in);
  model.cms_cols = wire::get_u64(in);
  model.run_seed = wire::get_u64(in);
  model.sample_rate = wire::get_f64(in);
  if (dim == 0 || model.depth == 0 || chains == 0 || dim > (1u << 24) ||
      model.depth > (1u << 16) || chains > (1u << 24)) {
    throw DataError("corrupt model header");
  }
  model.projector_seeds.resize(dim);
  for (auto& s : model.projector_seeds) s = wire::get_u64(in);
  model.delta.resize(dim);
  for (auto& d : model.delta) d = wire::get_f64(in);
  model.chains.reserve(chains);
  for (std::uint64_t m = 0; m < chains; ++m) {
    const auto seed = wire::get_u64(in);
    std::vector<std::uint32_t> features(model.depth);
    for (auto& f : features) f = wire::get_u32(in);
    std::vector<double> shifts(model.depth);
    for (auto& e : shifts) e = wire::get_f64(in);
    std::vector<CountMinSketch> sketches;
    sketches.reserve(model.depth);
    for (std::size_t l = 0; l < model.depth; ++l) {
      sketches.push_back(CountMinSketch::deserialize(in));
      if (sketches.back().rows() != model.cms_rows || sketches.back().cols() != model.cms_cols) {
        throw DataError("sketch dimensions disagree with model header");
      }
    }
    try {
      model.chains.emplace_back(seed, model.delta, std::move(features), std::move(shifts),
                                std::move(sketches));
    } catch (const ConfigError& e) {
      throw DataError(std::string("corrupt chain in model file: ") + e.what());
    }
  }
  if (!in.empty()) throw DataError("trailing bytes after model");
  return model;
}

inline void save_model(const EnsembleModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write model file '" + path + "'");
  const std::string bytes = encode_model(model);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing model file '" + path + "'");
}

inline EnsembleModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file '" + path + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_model(bytes);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

}  // namespace hashchain
