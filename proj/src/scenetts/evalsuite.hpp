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

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "scenetts/backbone.hpp"
#include "scenetts/dataset.hpp"
#include "scenetts/src_classifier.hpp"

namespace scenetts {

std::vector<std::string> tokenize_words(const std::string& text);

/// Word error rate in percent: 100 * (S + I + D) / len(reference), via
/// minimum edit distance. Reference must be non-empty.
double word_error_rate(const std::vector<std::string>& reference,
                       const std::vector<std::string>& hypothesis);

/// Raw word-level edit distance (used by property tests).
int word_edit_distance(const std::vector<std::string>& a, const std::vector<std::string>& b);

struct DtwAlignment {
  std::vector<std::pair<int, int>> path;  // starts (0,0), ends (Ta-1, Tb-1)
  double mean_cost = 0.0;
};

/// DTW over row-major frame matrices [ta, dim] / [tb, dim] with Euclidean
/// frame distance and steps (1,0), (0,1), (1,1).
DtwAlignment dtw_align(const std::vector<double>& a, int ta, const std::vector<double>& b,
                       int tb, int dim);

/// Mel cepstral distortion in dB: DTW-aligned mean of
/// (10/ln10) * sqrt(2 * sum_d (c_d - c'_d)^2) over cepstra 1..D.
double mcd_db(const AudioClip& reference, const AudioClip& synthesized,
              const FeatureParams& params, int coeffs = 13);

/// Cosine similarity; equals the dot product for unit-norm embeddings.
double secs(const std::vector<double>& a, const std::vector<double>& b);

struct SrePrediction {
  int predicted = -1;
  int true_class = -1;
};

/// 100 * (#mismatched / N).
double sre_percent(const std::vector<SrePrediction>& predictions);

struct GradCamHeatmap {
  int height = 0;
  int width = 0;
  std::vector<double> values;  // row-major, in [0,1]
  int target_class = 0;
};

/// Gradient-weighted class activation map over the builtin conv backbone's
/// last feature maps, rectified, bilinearly upsampled to the input resolution
/// and max-normalized. Rejects encoders using the file backbone.
GradCamHeatmap grad_cam(const SceneImage& image, int target_class,
                        const SceneEncoder& encoder);

/// Per-file hypothesis text for WER; wired to a real ASR system externally.
using TranscriptionProvider =
    std::function<std::string(const AudioClip& audio, const ManifestEntry& entry)>;

/// Pipeline-test provider: echoes the reference transcript (WER 0).
TranscriptionProvider echo_transcription_provider();

struct EvalRecord {
  std::string id;
  bool ok = false;
  std::string error;
  std::optional<double> wer;
  std::optional<double> mcd;
  std::optional<double> secs;
  int predicted_class = -1;
  int true_class = -1;
};

struct MetricReport {
  std::vector<EvalRecord> records;
  int total = 0;
  int succeeded = 0;
  std::optional<double> mean_wer;
  std::optional<double> mean_mcd;
  std::optional<double> mean_secs;
  std::optional<double> sre;

  void recompute();  // aggregates from records
  nlohmann::json to_json() const;
  std::string to_csv() const;
};

struct EvalRequest {
  const Manifest* manifest = nullptr;
  Split split = Split::test;
  Synthesizer* model = nullptr;
  SrcClassifier* src = nullptr;              // null -> no SRE column
  const FileBackbone* file_backbone = nullptr;  // required for "file" scene backbone
  TranscriptionProvider asr;                 // empty -> no WER column
  int mcd_coeffs = 13;
  std::uint64_t seed = 0;
  /// Test hook: overrides synthesis (e.g. identity for self-evaluation).
  std::function<AudioClip(const ManifestEntry&, const CorpusItem&)> synth_override;
};

/// Runs the objective metric suite over one manifest split. Per-utterance
/// failures are recorded and skipped; aggregates cover the successes.
MetricReport evaluate(const EvalRequest& request);

/// SRE of the ground-truth reverberant audio itself under a frozen classifier.
double ground_truth_sre(const Manifest& manifest, Split split, const SrcClassifier& src);

}  // namespace scenetts
