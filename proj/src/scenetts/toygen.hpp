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
#include "scenetts/image.hpp"
#include "scenetts/rng.hpp"

namespace scenetts {

/// Synthetic "speaker": a pitch plus formant profile for speech-like signals.
struct SpeakerProfile {
  double f0_hz = 120.0;
  double formant1_hz = 600.0;
  double formant2_hz = 1800.0;
};

/// Voiced, syllable-structured signal: a glottal-like pulse train shaped by
/// two resonators with slowly wandering formants and a syllabic envelope.
AudioClip make_speechlike(Rng& rng, int sample_rate, double seconds,
                          const SpeakerProfile& profile);

/// Exponentially decaying white-noise RIR with a unit direct-path tap at t=0;
/// decay constant chosen so the energy falls 60 dB in t60 seconds.
RoomImpulseResponse make_exp_decay_rir(Rng& rng, int sample_rate, double t60_seconds,
                                       double tail_seconds = -1.0);

/// Procedural scene image for a reverb class: class-specific base color plus
/// seeded texture.
SceneImage make_scene_image(Rng& rng, int size, int reverb_class);

/// Deterministic pseudo-backbone feature derived from image statistics:
/// color moments in the leading dimensions, content-hashed noise in the rest.
/// The same image always maps to the same feature.
std::vector<double> pseudo_backbone_feature(const SceneImage& image, int dim);

struct ToyCorpusOptions {
  std::string out_dir;
  int num_utterances = 10;
  int sample_rate = 22050;
  std::uint64_t seed = 1234;
  std::vector<double> rir_t60 = {0.15, 0.45, 0.8, 1.3};
  double min_seconds = 0.55;
  double max_seconds = 0.75;
  int image_size = 64;
  int feature_dim = 512;
};

/// Materializes the bundled toy corpus:
///   <out>/clean/spkN_uttMM.wav + .txt, <out>/rir/rirN.wav,
///   <out>/image/rirN.png, <out>/scene_features.jsonl
void generate_toy_corpus(const ToyCorpusOptions& options);

}  // namespace scenetts
