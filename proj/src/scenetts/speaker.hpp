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

#include "scenetts/features.hpp"
#include "scenetts/nn.hpp"

namespace scenetts {

struct SpeakerEncoderConfig {
  int n_mels = 80;
  int channels = 64;
  int attn_heads = 4;
  int d_spk = 192;
  int min_frames = 32;

  void validate() const;
};

/// Reference-style encoder: spectral conv blocks over mel frames, multi-head
/// attentive temporal pooling, then a linear projection to a unit-norm
/// speaker embedding.
class SpeakerEncoder : public Module {
 public:
  SpeakerEncoder(const SpeakerEncoderConfig& cfg, Rng& rng);

  /// mel [T, n_mels] -> [d_spk] with unit L2 norm. Requires T >= min_frames.
  Tensor forward(const Tensor& mel) const;

  Tensor forward(const MelSpectrogram& mel) const;

  const SpeakerEncoderConfig& config() const { return cfg_; }

 private:
  SpeakerEncoderConfig cfg_;
  Conv1d conv1_, conv2_;
  LayerNorm ln_;
  Linear attn_, out_;
};

}  // namespace scenetts
