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

// JSON rendering of engine metrics. Kept apart from engine.hpp so the core
// headers do not depend on a JSON library.

#include "json.hpp"  // nlohmann/json, vendored

#include "hashchain/engine.hpp"

namespace hashchain {

inline nlohmann::json to_json(const StageMetrics& m) {
  return {{"invocations", m.invocations},
          {"elements_in", m.elements_in},
          {"elements_out", m.elements_out},
          {"records_pre_combine", m.records_pre_combine},
          {"records_shuffled", m.records_shuffled},
          {"bytes_shuffled", m.bytes_shuffled},
          {"seconds", m.seconds}};
}

/// {"stages": {name: metrics, ...}, "total": metrics}
inline nlohmann::json metrics_report(const EngineMetrics& metrics) {
  nlohmann::json stages = nlohmann::json::object();
  for (const auto& [name, m] : metrics.snapshot()) stages[name] = to_json(m);
  return {{"stages", stages}, {"total", to_json(metrics.total())}};
}

}  // namespace hashchain
