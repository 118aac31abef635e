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
#include <vector>

#include "scenetts/audio.hpp"
#include "scenetts/dsp.hpp"
#include "scenetts/features.hpp"

namespace scenetts {

/// Index of the first bin boundary exceeding rt60; values at or above the
/// last boundary land in the overflow class K-1. bins must be strictly
/// ascending (length K-1 for K classes).
int assign_reverb_class(double rt60_seconds, const std::vector<double>& bins);
void validate_bins(const std::vector<double>& bins);

enum class Split { train, val, test };
std::string split_name(Split s);
Split split_from_name(const std::string& name);

struct ManifestEntry {
  std::string clean_audio_path;
  std::string rir_path;
  std::string image_path;
  int reverb_class = 0;
  int num_classes = 0;
  std::string transcript;
  std::string speaker_id;
  Split split = Split::train;
};

/// JSON-lines manifest: a header line carrying schema_version, feature params
/// and the class binning, followed by one entry object per line (each line
/// also carries schema_version).
struct Manifest {
  static constexpr int kSchemaVersion = 1;

  FeatureParams features;
  std::vector<double> bins;
  int num_classes = 0;
  std::vector<ManifestEntry> entries;

  std::vector<const ManifestEntry*> split_entries(Split s) const;
  /// Number of distinct classes present in a split.
  int classes_present(Split s) const;
};

void write_manifest(const std::string& path, const Manifest& manifest);
Manifest read_manifest(const std::string& path);

struct CleanUtterance {
  std::string path;
  std::string transcript;
  std::string speaker_id;
};

struct RirImagePair {
  std::string rir_path;
  std::string image_path;
};

struct BuildManifestOptions {
  std::vector<double> bins = {0.3, 0.6, 1.0};
  double ratio_train = 0.8;
  double ratio_val = 0.1;
  double ratio_test = 0.1;
  std::uint64_t seed = 1234;
  FeatureParams features;
};

/// Pairs each clean utterance with a uniformly sampled (RIR, image) pair,
/// derives reverb classes from estimated RT60, and splits deterministically.
/// Fails if any class is missing from the train split.
Manifest build_manifest(const std::vector<CleanUtterance>& clean,
                        const std::vector<RirImagePair>& pairs,
                        const BuildManifestOptions& options);

/// Scans a directory of *.wav with sidecar *.txt transcripts. Speaker id is
/// the filename stem up to the first '_' (or "default"). Sorted by path.
std::vector<CleanUtterance> scan_clean_dir(const std::string& dir);

/// Pairs rir_dir/*.wav with image_dir/<same stem>.png. Missing images are an
/// error that lists every offending RIR.
std::vector<RirImagePair> pair_rirs_with_images(const std::string& rir_dir,
                                                const std::string& image_dir);

/// One manifest entry materialized: audio loaded, resampled to the feature
/// sample rate, and convolved into the reverberant ground truth.
struct CorpusItem {
  AudioClip clean;
  RoomImpulseResponse rir;
  AudioClip reverberant;
};

CorpusItem load_corpus_item(const ManifestEntry& entry, int target_sample_rate);

/// Reads a WAV as an RIR, resampling to target_sample_rate. env_label is
/// inferred from a "wide_"/"narrow_" filename prefix when present.
RoomImpulseResponse load_rir(const std::string& path, int target_sample_rate);

}  // namespace scenetts
