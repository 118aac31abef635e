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

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "scenetts/backbone.hpp"
#include "scenetts/src_classifier.hpp"

namespace scenetts {

struct TrainOptions {
  int batch_size = 8;
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double weight_decay = 0.01;
  double lambda_recon = 45.0;
  double lambda_kl = 1.0;
  double lambda_dur = 1.0;
  double lambda_scene = 1.0;
  double lambda_src = 1.0;
  double lambda_adv = 0.0;  // adversarial arm is off by default
  int max_steps = 1000;
  int checkpoint_every = 500;
  int validate_every = 100;

  void validate() const;
};

struct SrcTrainOptions {
  int epochs = 50;
  double lr = 1e-3;
  int batch_size = 8;
  double weight_decay = 0.0;

  void validate() const;
};

struct EvalOptions {
  int mcd_coeffs = 13;
  std::string asr_provider;  // "" (off) or "echo"

  void validate() const;
};

/// Validated union of all module configurations. Loadable from a documented
/// key=value text file with a required schema_version; individual keys can be
/// overridden afterwards (CLI flags take precedence over file values).
/// Unknown keys are rejected with the offending key in the message.
struct RunConfig {
  static constexpr int kSchemaVersion = 1;

  std::uint64_t seed = 1234;
  FeatureParams features;
  std::vector<double> bins = {0.3, 0.6, 1.0};
  double ratio_train = 0.8;
  double ratio_val = 0.1;
  double ratio_test = 0.1;
  BackboneConfig backbone;
  SceneEncoderConfig scene;
  std::string scene_features_file;
  SpeakerEncoderConfig speaker;
  SrcClassifierConfig src;
  TrainOptions train;
  SrcTrainOptions src_train;
  EvalOptions eval;

  static RunConfig from_file(const std::string& path);
  /// Applies one key=value setting; throws ValidationError on unknown keys or
  /// unparsable values, naming the field.
  void set(const std::string& key, const std::string& value);
  void apply_overrides(const std::vector<std::pair<std::string, std::string>>& overrides);

  ModelConfig model_config() const;
  void validate() const;
};

// Config snapshots stored inside checkpoints.
nlohmann::json model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

struct SrcSnapshot {
  SrcClassifierConfig src;
  FeatureParams features;
  std::vector<double> bins;
  std::uint64_t init_seed = 0;
};

nlohmann::json src_snapshot_to_json(const SrcSnapshot& snap);
SrcSnapshot src_snapshot_from_json(const nlohmann::json& j);

}  // namespace scenetts
