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

#include "hashchain/chain.hpp"
#include "hashchain/cms.hpp"
#include "hashchain/core.hpp"
#include "hashchain/engine.hpp"
#include "hashchain/hash.hpp"
#include "hashchain/io.hpp"
#include "hashchain/model_io.hpp"
#include "hashchain/projector.hpp"
#include "hashchain/scoring.hpp"
#include "hashchain/streaming.hpp"
