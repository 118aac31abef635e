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

struct SrcClassifierConfig {
  int n_mels = 80;
  int num_classes = 4;
  int conv_channels[4] = {16, 32, 64, 64};
  int transformer_dim = 128;
  int transformer_heads = 4;
  int min_frames = 16;  // four 2x2 pool stages need T >= 16

  void validate() const;
};

/// Speech reverberation classifier: a 2-D conv branch for local
/// time-frequency structure and a transformer branch for global dependencies
/// across frames, concatenated into a classification layer. Pretrained on
/// reverberant speech, then frozen and used as a critic on generated mels;
/// gradients keep flowing to the input.
class SrcClassifier : public Module {
 public:
  SrcClassifier(const SrcClassifierConfig& cfg, Rng& rng);

  /// mel [T, n_mels] -> logits [num_classes]. Requires T >= min_frames.
  Tensor forward(const Tensor& mel) const;
  Tensor forward(const MelSpectrogram& mel) const;

  static Tensor loss(const Tensor& logits, int target_class);

  int predict(const MelSpectrogram& mel) const;

  const SrcClassifierConfig& config() const { return cfg_; }

 private:
  Tensor conv_block(const Tensor& x, const Conv2d& conv, const LayerNorm& norm) const;

  SrcClassifierConfig cfg_;
  Conv2d cv1_, cv2_, cv3_, cv4_;
  LayerNorm n1_, n2_, n3_, n4_;
  Linear proj_;
  TransformerBlock transformer_;
  Linear classifier_;
};

}  // namespace scenetts
