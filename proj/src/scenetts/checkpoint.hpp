// Copyright 2026 scenetts authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "scenetts/nn.hpp"

namespace scenetts {

// Versioned binary checkpoint: magic, format version, a JSON header holding
// the kind ("tts" or "src"), a config snapshot and the parameter shape table,
// then raw little-endian doubles in table order. Writes are atomic
// (temp file + rename).

inline constexpr int kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const std::string& kind,
                     const nlohmann::json& config, const std::vector<Parameter*>& params);

/// Reads and returns the config snapshot; validates magic, version and kind.
nlohmann::json peek_checkpoint(const std::string& path, const std::string& expected_kind);

/// Loads parameter values into `params`, validating the stored name/shape
/// table matches exactly (same order, names and shapes).
void load_checkpoint_params(const std::string& path, const std::string& expected_kind,
                            const std::vector<Parameter*>& params);

}  // namespace scenetts
