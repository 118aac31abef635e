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

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "scenetts/backbone.hpp"
#include "scenetts/config.hpp"
#include "scenetts/dataset.hpp"
#include "scenetts/src_classifier.hpp"

namespace scenetts {

struct StepReport {
  int step = 0;
  // Unweighted term values with their weights; only enabled terms appear.
  std::vector<std::pair<std::string, double>> terms;
  std::vector<std::pair<std::string, double>> weights;
  double total = 0.0;
  double seconds = 0.0;

  double weighted_sum() const;
  nlohmann::json to_json() const;
};

struct SrcPretrainResult {
  std::string checkpoint_path;
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
  int epochs_run = 0;
};

/// Phase one: cross-entropy training of the reverberation classifier on
/// (mel of reverberant speech, reverb class). Deterministic for a fixed seed.
/// epochs == 0 writes the initialization unchanged.
SrcPretrainResult pretrain_src(const Manifest& manifest, const RunConfig& config,
                               const std::string& out_checkpoint);

struct TrainResult {
  std::string final_checkpoint;
  std::string metrics_path;
  int steps_run = 0;
  double first10_mean_total = 0.0;
  double last10_mean_total = 0.0;
  std::uint64_t src_hash_before = 0;
  std::uint64_t src_hash_after = 0;
  std::vector<std::string> term_names;  // terms present in every StepReport
};

/// Phase two: trains the conditional synthesizer against the composite
/// objective; the SRC (when enabled) is loaded frozen and only supplies the
/// classification loss on generated mels. Writes metrics.jsonl and
/// checkpoints under out_dir.
TrainResult train_synthesizer(const Manifest& manifest, const std::string& src_checkpoint,
                              const RunConfig& config, const std::string& out_dir);

// Checkpoint round-trips for the two model kinds.
std::unique_ptr<SrcClassifier> load_src(const std::string& path,
                                        SrcSnapshot* snapshot_out = nullptr);
std::unique_ptr<Synthesizer> load_synthesizer(const std::string& path);
void save_synthesizer(const std::string& path, const Synthesizer& model);

}  // namespace scenetts
