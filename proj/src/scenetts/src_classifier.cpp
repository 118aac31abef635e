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

#include "scenetts/src_classifier.hpp"

#include <algorithm>

#include "scenetts/errors.hpp"

namespace scenetts {

void SrcClassifierConfig::validate() const {
  if (n_mels < 16) throw ValidationError("src: n_mels must be >= 16 for four pool stages");
  if (num_classes < 2) throw ValidationError("src: need at least 2 classes");
  for (int c : conv_channels) {
    if (c < 1) throw ValidationError("src: conv channels must be positive");
  }
  if (transformer_dim < transformer_heads || transformer_dim % transformer_heads != 0) {
    throw ValidationError("src: transformer_dim must be a positive multiple of heads");
  }
  if (min_frames < 16) throw ValidationError("src: min_frames must be >= 16");
}

SrcClassifier::SrcClassifier(const SrcClassifierConfig& cfg, Rng& rng)
    : cfg_(cfg),
      cv1_("src.cv1", 1, cfg.conv_channels[0], 3, 1, 1, rng),
      cv2_("src.cv2", cfg.conv_channels[0], cfg.conv_channels[1], 3, 1, 1, rng),
      cv3_("src.cv3", cfg.conv_channels[1], cfg.conv_channels[2], 3, 1, 1, rng),
      cv4_("src.cv4", cfg.conv_channels[2], cfg.conv_channels[3], 3, 1, 1, rng),
      n1_("src.n1", cfg.conv_channels[0]),
      n2_("src.n2", cfg.conv_channels[1]),
      n3_("src.n3", cfg.conv_channels[2]),
      n4_("src.n4", cfg.conv_channels[3]),
      proj_("src.proj", cfg.n_mels, cfg.transformer_dim, rng),
      transformer_("src.transformer", cfg.transformer_dim, cfg.transformer_heads,
                   2 * cfg.transformer_dim, rng),
      classifier_("src.classifier", cfg.conv_channels[3] + cfg.transformer_dim,
                  cfg.num_classes, rng) {
  cfg_.validate();
  register_child("cv1", cv1_);
  register_child("cv2", cv2_);
  register_child("cv3", cv3_);
  register_child("cv4", cv4_);
  register_child("n1", n1_);
  register_child("n2", n2_);
  register_child("n3", n3_);
  register_child("n4", n4_);
  register_child("proj", proj_);
  register_child("transformer", transformer_);
  register_child("classifier", classifier_);
}

Tensor SrcClassifier::conv_block(const Tensor& x, const Conv2d& conv,
                                 const LayerNorm& norm) const {
  Tensor h = conv.forward(x);
  // Channel-wise layer norm at each time-frequency position.
  const int c = h.shape()[0], hh = h.shape()[1], ww = h.shape()[2];
  Tensor flat = transpose(reshape(h, {c, hh * ww}));  // [HW, C]
  flat = norm.forward(flat);
  h = reshape(transpose(flat), {c, hh, ww});
  return avg_pool2d(relu(h));
}

Tensor SrcClassifier::forward(const Tensor& mel) const {
  if (mel.shape().size() != 2 || mel.shape()[1] != cfg_.n_mels) {
    throw ValidationError("src: expected [T," + std::to_string(cfg_.n_mels) +
                          "] mel input, got " + shape_str(mel.shape()));
  }
  const int frames = mel.shape()[0];
  if (frames < cfg_.min_frames) {
    throw ValidationError("src: mel too short (" + std::to_string(frames) +
                          " frames, need >= " + std::to_string(cfg_.min_frames) + ")");
  }

  // Branch A: local time-frequency features.
  Tensor a = reshape(mel, {1, frames, cfg_.n_mels});
  a = conv_block(a, cv1_, n1_);
  a = conv_block(a, cv2_, n2_);
  a = conv_block(a, cv3_, n3_);
  a = conv_block(a, cv4_, n4_);
  Tensor feat_a = global_avg_pool2d(a);  // [conv_channels[3]]

  // Branch B: global dependencies across time frames.
  Tensor b = proj_.forward(mel);  // [T, D]
  b = add(b, sinusoidal_encoding(frames, cfg_.transformer_dim));
  b = transformer_.forward(b);
  Tensor feat_b = mean_over_rows(b);  // [D]

  return classifier_.forward_vec(concat_vec(feat_a, feat_b));
}

Tensor SrcClassifier::forward(const MelSpectrogram& mel) const {
  return forward(Tensor::from_values(mel.values, {mel.frames, mel.n_mels}));
}

Tensor SrcClassifier::loss(const Tensor& logits, int target_class) {
  return softmax_cross_entropy(logits, target_class);
}

int SrcClassifier::predict(const MelSpectrogram& mel) const {
  const Tensor logits = forward(mel);
  const auto& v = logits.value();
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace scenetts
