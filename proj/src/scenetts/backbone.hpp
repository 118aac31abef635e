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
#include <optional>
#include <string>
#include <vector>

#include "scenetts/audio.hpp"
#include "scenetts/features.hpp"
#include "scenetts/image.hpp"
#include "scenetts/mas.hpp"
#include "scenetts/nn.hpp"
#include "scenetts/scene.hpp"
#include "scenetts/speaker.hpp"

namespace scenetts {

/// Maps text to integer ids. The default front end is character-level;
/// a phonemizer can be plugged in behind the same interface.
class TextFrontend {
 public:
  virtual ~TextFrontend() = default;
  virtual std::vector<int> to_ids(const std::string& text) const = 0;
  virtual int vocab_size() const = 0;
};

class CharFrontend : public TextFrontend {
 public:
  explicit CharFrontend(int vocab = 256) : vocab_(vocab) {}
  std::vector<int> to_ids(const std::string& text) const override;
  int vocab_size() const override { return vocab_; }

 private:
  int vocab_;
};

struct BackboneConfig {
  int vocab = 256;
  int hidden = 96;  // text / posterior / flow / duration width
  int text_layers = 2;
  int text_heads = 2;
  int latent_channels = 96;  // C (must be even for the coupling split)
  int flow_blocks = 2;
  int decoder_channels = 96;
  std::vector<int> upsample = {8, 8, 4};  // product must equal hop_length
  int d_cond = 192;
  double temperature = 0.667;
  int segment_frames = 32;

  void validate(int hop_length) const;
};

/// Full model configuration, snapshotted into checkpoints.
struct ModelConfig {
  FeatureParams features;
  BackboneConfig backbone;
  SceneEncoderConfig scene;
  SpeakerEncoderConfig speaker;
  std::vector<double> bins = {0.3, 0.6, 1.0};
  std::uint64_t init_seed = 1234;

  int num_classes() const { return static_cast<int>(bins.size()) + 1; }
  /// Syncs derived fields (scene.num_classes, speaker.n_mels) and validates.
  void finalize();
  void validate_bins_local() const;
};

struct TextEncoding {
  Tensor hidden;  // [S, hidden]
  Tensor mu;      // [S, C]
  Tensor logs;    // [S, C]
};

class TextEncoder : public Module {
 public:
  TextEncoder(const BackboneConfig& cfg, Rng& rng);
  TextEncoding forward(const std::vector<int>& ids) const;

 private:
  BackboneConfig cfg_;
  Embedding emb_;
  std::vector<std::unique_ptr<TransformerBlock>> blocks_;
  LayerNorm ln_;
  Linear proj_;
};

class PosteriorEncoder : public Module {
 public:
  struct Out {
    Tensor mu;    // [C,T]
    Tensor logs;  // [C,T]
  };

  PosteriorEncoder(const BackboneConfig& cfg, int spec_bins, Rng& rng);
  /// spec: log-magnitude linear spectrogram [bins, T].
  Out forward(const Tensor& spec, const Tensor& cond) const;

 private:
  Conv1d pre_;
  Linear cond_proj_;
  Conv1d h1_, h2_;
  Conv1d out_;
};

class CouplingBlock : public Module {
 public:
  CouplingBlock(const std::string& name, int channels, int hidden, int d_cond, int index,
                Rng& rng);
  /// (log-scale, shift) for the coupled half, conditioned on the kept half.
  std::pair<Tensor, Tensor> scale_shift(const Tensor& za, const Tensor& cond) const;
  const std::vector<int>& perm() const { return perm_; }
  const std::vector<int>& inv_perm() const { return inv_perm_; }

 private:
  std::vector<int> perm_, inv_perm_;
  Conv1d net1_;
  Linear cond_proj_;
  Conv1d net2_;
  Conv1d out_;
};

/// Stack of affine coupling layers with fixed channel permutations.
class Flow : public Module {
 public:
  Flow(const BackboneConfig& cfg, Rng& rng);

  struct Forward {
    Tensor u;       // [C,T]
    Tensor logdet;  // scalar: sum of coupling log-scales
  };
  Forward forward(const Tensor& z, const Tensor& cond) const;
  Tensor inverse(const Tensor& u, const Tensor& cond) const;

  /// Forward transform of the sample plus exact per-coordinate Gaussian
  /// transport of (mu, log-sigma): conditioned on the sampled kept halves,
  /// each output coordinate of a coupling stays Gaussian with these
  /// parameters. Keeps the per-step KL in closed form (hence nonnegative).
  struct Transport {
    Tensor u;     // [C,T]
    Tensor mu;    // [C,T]
    Tensor logs;  // [C,T]
  };
  Transport transport(const Tensor& z, const Tensor& mu, const Tensor& logs,
                      const Tensor& cond) const;

 private:
  int channels_;
  std::vector<std::unique_ptr<CouplingBlock>> blocks_;
};

class DurationPredictor : public Module {
 public:
  DurationPredictor(const BackboneConfig& cfg, Rng& rng);
  /// Predicts per-phoneme log-durations from (internally detached) text
  /// hiddens [S, hidden]. Returns [S].
  Tensor forward(const Tensor& text_hidden, const Tensor& cond) const;

  /// round(exp(log_durations)) clamped to >= 1.
  static std::vector<int> to_frame_counts(const std::vector<double>& log_durations);

 private:
  Conv1d c1_, c2_;
  Linear cond_proj_;
  Linear out_;
};

class Decoder : public Module {
 public:
  Decoder(const BackboneConfig& cfg, int hop_length, Rng& rng);
  /// z [C,T] -> waveform [T * hop_length], tanh-bounded.
  Tensor forward(const Tensor& z, const Tensor& cond) const;

 private:
  struct Stage {
    std::unique_ptr<ConvTranspose1d> up;
    std::unique_ptr<Conv1d> res_a, res_b;
  };
  Conv1d pre_;
  Linear cond_proj_;
  std::vector<Stage> stages_;
  Conv1d post_;
};

struct SynthesisRequest {
  std::vector<int> text_ids;
  std::vector<double> scene_feature;            // used with the file backbone
  const SceneImage* image = nullptr;            // used with the builtin backbone
  const MelSpectrogram* speaker_ref = nullptr;  // nullptr -> default embedding
  std::optional<double> temperature;            // default from config
  std::uint64_t seed = 0;
};

/// The complete conditional synthesizer: all sub-modules plus the fused
/// scene/speaker conditioning that is injected into the posterior encoder,
/// flow couplings, duration predictor and decoder.
class Synthesizer : public Module {
 public:
  Synthesizer(const ModelConfig& cfg, Rng& rng);

  Tensor fuse(const Tensor& scene_embedding, const Tensor& speaker_embedding) const;
  Tensor fuse_scene_part(const Tensor& scene_embedding) const;
  Tensor fuse_speaker_part(const Tensor& speaker_embedding) const;
  Tensor default_speaker_embedding() const;

  AudioClip synthesize(const SynthesisRequest& request) const;

  ModelConfig config;
  TextEncoder text_encoder;
  PosteriorEncoder posterior_encoder;
  Flow flow;
  DurationPredictor duration_predictor;
  Decoder decoder;
  SceneEncoder scene_encoder;
  SpeakerEncoder speaker_encoder;
  Linear fuse_scene_proj, fuse_speaker_proj;  // bias-free
  Tensor default_speaker;
};

/// MAS frame-phoneme log-likelihoods: row-major [T, S] of
/// sum_c log N(u[t,c]; mu[s,c], exp(logs[s,c])).
std::vector<double> alignment_log_likelihood(const std::vector<double>& u_tc, int frames,
                                             const std::vector<double>& mu_sc,
                                             const std::vector<double>& logs_sc,
                                             int phonemes, int channels);

/// Per-frame phoneme index from an alignment path (for prior expansion).
std::vector<int> expand_ids(const AlignmentPath& path);

}  // namespace scenetts
