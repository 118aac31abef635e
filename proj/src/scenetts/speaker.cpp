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

#include "scenetts/speaker.hpp"

#include "scenetts/errors.hpp"

namespace scenetts {

void SpeakerEncoderConfig::validate() const {
  if (n_mels < 1 || channels < 1 || d_spk < 1) {
    throw ValidationError("speaker encoder: dimensions must be positive");
  }
  if (attn_heads < 1) throw ValidationError("speaker encoder: need >= 1 attention head");
  if (min_frames < 2) throw ValidationError("speaker encoder: min_frames must be >= 2");
}

SpeakerEncoder::SpeakerEncoder(const SpeakerEncoderConfig& cfg, Rng& rng)
    : cfg_(cfg),
      conv1_("speaker.conv1", cfg.n_mels, cfg.channels, 5, rng),
      conv2_("speaker.conv2", cfg.channels, cfg.channels, 5, rng),
      ln_("speaker.ln", cfg.channels),
      attn_("speaker.attn", cfg.channels, cfg.attn_heads, rng),
      out_("speaker.out", cfg.channels * cfg.attn_heads, cfg.d_spk, rng) {
  cfg_.validate();
  register_child("conv1", conv1_);
  register_child("conv2", conv2_);
  register_child("ln", ln_);
  register_child("attn", attn_);
  register_child("out", out_);
}

Tensor SpeakerEncoder::forward(const Tensor& mel) const {
  if (mel.shape().size() != 2 || mel.shape()[1] != cfg_.n_mels) {
    throw ValidationError("speaker encoder: expected [T," + std::to_string(cfg_.n_mels) +
                          "] mel input, got " + shape_str(mel.shape()));
  }
  const int frames = mel.shape()[0];
  if (frames < cfg_.min_frames) {
    throw ValidationError("speaker encoder: reference too short (" + std::to_string(frames) +
                          " frames, need >= " + std::to_string(cfg_.min_frames) + ")");
  }
  Tensor x = transpose(mel);  // [M,T]
  x = relu(conv1_.forward(x));
  x = relu(conv2_.forward(x));          // [C,T]
  Tensor h = ln_.forward(transpose(x))  // [T,C]
      ;
  // Multi-head attentive pooling over time.
  Tensor scores = transpose(attn_.forward(h));    // [heads,T]
  Tensor alpha = row_softmax(scores);             // [heads,T]
  Tensor pooled = matmul(alpha, h);               // [heads,C]
  Tensor flat = reshape(pooled, {cfg_.attn_heads * cfg_.channels});
  return l2_normalize(out_.forward_vec(flat));
}

Tensor SpeakerEncoder::forward(const MelSpectrogram& mel) const {
  return forward(Tensor::from_values(mel.values, {mel.frames, mel.n_mels}));
}

}  // namespace scenetts
