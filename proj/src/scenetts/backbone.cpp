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

#include "scenetts/backbone.hpp"

#include <algorithm>
#include <cmath>

#include "scenetts/errors.hpp"

namespace scenetts {

std::vector<int> CharFrontend::to_ids(const std::string& text) const {
  if (text.empty()) throw ValidationError("text front end: empty text");
  std::vector<int> ids;
  ids.reserve(text.size());
  for (unsigned char c : text) {
    ids.push_back(static_cast<int>(c) % vocab_);
  }
  return ids;
}

void BackboneConfig::validate(int hop_length) const {
  if (vocab < 2) throw ValidationError("backbone: vocab must be >= 2");
  if (hidden < 4) throw ValidationError("backbone: hidden too small");
  if (text_layers < 1) throw ValidationError("backbone: need >= 1 text layer");
  if (hidden % text_heads != 0) {
    throw ValidationError("backbone: hidden must divide by text_heads");
  }
  if (latent_channels < 2 || latent_channels % 2 != 0) {
    throw ValidationError("backbone: latent_channels must be even and >= 2");
  }
  if (flow_blocks < 1) throw ValidationError("backbone: need >= 1 flow block");
  if (decoder_channels < 8) throw ValidationError("backbone: decoder_channels must be >= 8");
  int prod = 1;
  for (int u : upsample) {
    if (u < 2) throw ValidationError("backbone: upsample factors must be >= 2");
    prod *= u;
  }
  if (prod != hop_length) {
    throw ValidationError("backbone: product of upsample factors (" + std::to_string(prod) +
                          ") must equal hop_length (" + std::to_string(hop_length) + ")");
  }
  if (d_cond < 1) throw ValidationError("backbone: d_cond must be positive");
  if (temperature <= 0.0) throw ValidationError("backbone: temperature must be positive");
  if (segment_frames < 1) throw ValidationError("backbone: segment_frames must be >= 1");
}

void ModelConfig::finalize() {
  features.validate();
  backbone.validate(features.hop_length);
  scene.num_classes = num_classes();
  speaker.n_mels = features.n_mels;
  scene.validate();
  speaker.validate();
  validate_bins_local();
}

void ModelConfig::validate_bins_local() const {
  if (bins.empty()) throw ValidationError("model config: empty reverb bins");
  for (std::size_t i = 1; i < bins.size(); ++i) {
    if (bins[i] <= bins[i - 1]) {
      throw ValidationError("model config: bins must be strictly ascending");
    }
  }
}

TextEncoder::TextEncoder(const BackboneConfig& cfg, Rng& rng)
    : cfg_(cfg),
      emb_("text.emb", cfg.vocab, cfg.hidden, rng),
      ln_("text.ln", cfg.hidden),
      proj_("text.proj", cfg.hidden, 2 * cfg.latent_channels, rng) {
  register_child("emb", emb_);
  for (int i = 0; i < cfg.text_layers; ++i) {
    blocks_.push_back(std::make_unique<TransformerBlock>(
        "text.block" + std::to_string(i), cfg.hidden, cfg.text_heads, 4 * cfg.hidden, rng));
    register_child("block" + std::to_string(i), *blocks_.back());
  }
  register_child("ln", ln_);
  register_child("proj", proj_);
}

TextEncoding TextEncoder::forward(const std::vector<int>& ids) const {
  if (ids.empty()) throw ValidationError("text encoder: empty phoneme sequence");
  for (int id : ids) {
    if (id < 0 || id >= cfg_.vocab) {
      throw ValidationError("text encoder: id out of range: " + std::to_string(id));
    }
  }
  const int s = static_cast<int>(ids.size());
  Tensor h = add(emb_.forward(ids), sinusoidal_encoding(s, cfg_.hidden));
  for (const auto& block : blocks_) h = block->forward(h);
  h = ln_.forward(h);
  Tensor stats = proj_.forward(h);  // [S, 2C]
  TextEncoding out;
  out.hidden = h;
  out.mu = slice_cols(stats, 0, cfg_.latent_channels);
  out.logs = slice_cols(stats, cfg_.latent_channels, 2 * cfg_.latent_channels);
  return out;
}

PosteriorEncoder::PosteriorEncoder(const BackboneConfig& cfg, int spec_bins, Rng& rng)
    : pre_("posterior.pre", spec_bins, cfg.hidden, 5, rng),
      cond_proj_("posterior.cond", cfg.d_cond, cfg.hidden, rng),
      h1_("posterior.h1", cfg.hidden, cfg.hidden, 5, rng),
      h2_("posterior.h2", cfg.hidden, cfg.hidden, 5, rng),
      out_("posterior.out", cfg.hidden, 2 * cfg.latent_channels, 1, rng) {
  register_child("pre", pre_);
  register_child("cond", cond_proj_);
  register_child("h1", h1_);
  register_child("h2", h2_);
  register_child("out", out_);
}

PosteriorEncoder::Out PosteriorEncoder::forward(const Tensor& spec, const Tensor& cond) const {
  if (spec.shape().size() != 2) throw ValidationError("posterior: expected [bins,T] input");
  Tensor g = cond_proj_.forward_vec(cond);
  Tensor x = relu(add_colwise(pre_.forward(spec), g));
  x = relu(add_colwise(h1_.forward(x), g));
  x = relu(add_colwise(h2_.forward(x), g));
  Tensor stats = out_.forward(x);  // [2C, T]
  const int c = stats.shape()[0] / 2;
  PosteriorEncoder::Out out;
  out.mu = slice_rows(stats, 0, c);
  out.logs = slice_rows(stats, c, 2 * c);
  return out;
}

CouplingBlock::CouplingBlock(const std::string& name, int channels, int hidden, int d_cond,
                             int index, Rng& rng)
    : net1_(name + ".net1", channels / 2, hidden, 5, rng),
      cond_proj_(name + ".cond", d_cond, hidden, rng),
      net2_(name + ".net2", hidden, hidden, 5, rng),
      out_(name + ".out", hidden, channels, 3, rng, 1, -1, 1, true, /*zero_init=*/true) {
  // Fixed permutation derived from the block index; identical across runs and
  // checkpoints, so it needs no serialization.
  perm_.resize(channels);
  for (int i = 0; i < channels; ++i) perm_[i] = i;
  Rng perm_rng(0xF10Full * 2654435761ULL + static_cast<std::uint64_t>(index));
  perm_rng.shuffle(perm_);
  inv_perm_.resize(channels);
  for (int i = 0; i < channels; ++i) inv_perm_[perm_[i]] = i;

  register_child("net1", net1_);
  register_child("cond", cond_proj_);
  register_child("net2", net2_);
  register_child("out", out_);
}

std::pair<Tensor, Tensor> CouplingBlock::scale_shift(const Tensor& za,
                                                     const Tensor& cond) const {
  Tensor g = cond_proj_.forward_vec(cond);
  Tensor h = relu(add_colwise(net1_.forward(za), g));
  h = relu(net2_.forward(h));
  Tensor st = out_.forward(h);  // [C, T]
  const int c = st.shape()[0];
  return {slice_rows(st, 0, c / 2), slice_rows(st, c / 2, c)};
}

Flow::Flow(const BackboneConfig& cfg, Rng& rng) : channels_(cfg.latent_channels) {
  for (int i = 0; i < cfg.flow_blocks; ++i) {
    blocks_.push_back(std::make_unique<CouplingBlock>(
        "flow.block" + std::to_string(i), cfg.latent_channels, cfg.hidden, cfg.d_cond, i, rng));
    register_child("block" + std::to_string(i), *blocks_.back());
  }
}

Flow::Forward Flow::forward(const Tensor& z, const Tensor& cond) const {
  if (z.shape().size() != 2 || z.shape()[0] != channels_) {
    throw ValidationError("flow: expected [C,T] input with C=" + std::to_string(channels_));
  }
  const int half = channels_ / 2;
  Tensor x = z;
  Tensor logdet = Tensor::scalar(0.0);
  for (const auto& block : blocks_) {
    x = permute_rows(x, block->perm());
    Tensor xa = slice_rows(x, 0, half);
    Tensor xb = slice_rows(x, half, channels_);
    auto [s, t] = block->scale_shift(xa, cond);
    Tensor xb_new = add(mul(xb, exp_t(s)), t);
    x = concat_rows(xa, xb_new);
    logdet = add(logdet, sum(s));
  }
  return {x, logdet};
}

Tensor Flow::inverse(const Tensor& u, const Tensor& cond) const {
  if (u.shape().size() != 2 || u.shape()[0] != channels_) {
    throw ValidationError("flow: expected [C,T] input with C=" + std::to_string(channels_));
  }
  const int half = channels_ / 2;
  Tensor x = u;
  for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) {
    Tensor xa = slice_rows(x, 0, half);
    Tensor xb = slice_rows(x, half, channels_);
    auto [s, t] = (*it)->scale_shift(xa, cond);
    Tensor xb_orig = mul(sub(xb, t), exp_t(neg(s)));
    x = permute_rows(concat_rows(xa, xb_orig), (*it)->inv_perm());
  }
  return x;
}

Flow::Transport Flow::transport(const Tensor& z, const Tensor& mu, const Tensor& logs,
                                const Tensor& cond) const {
  const int half = channels_ / 2;
  Tensor x = z, m = mu, ls = logs;
  for (const auto& block : blocks_) {
    x = permute_rows(x, block->perm());
    m = permute_rows(m, block->perm());
    ls = permute_rows(ls, block->perm());
    Tensor xa = slice_rows(x, 0, half);
    auto [s, t] = block->scale_shift(xa, cond);
    Tensor es = exp_t(s);
    Tensor xb = add(mul(slice_rows(x, half, channels_), es), t);
    Tensor mb = add(mul(slice_rows(m, half, channels_), es), t);
    Tensor lsb = add(slice_rows(ls, half, channels_), s);
    x = concat_rows(xa, xb);
    m = concat_rows(slice_rows(m, 0, half), mb);
    ls = concat_rows(slice_rows(ls, 0, half), lsb);
  }
  return {x, m, ls};
}

DurationPredictor::DurationPredictor(const BackboneConfig& cfg, Rng& rng)
    : c1_("duration.c1", cfg.hidden, cfg.hidden, 3, rng),
      c2_("duration.c2", cfg.hidden, cfg.hidden, 3, rng),
      cond_proj_("duration.cond", cfg.d_cond, cfg.hidden, rng),
      out_("duration.out", cfg.hidden, 1, rng) {
  register_child("c1", c1_);
  register_child("c2", c2_);
  register_child("cond", cond_proj_);
  register_child("out", out_);
}

Tensor DurationPredictor::forward(const Tensor& text_hidden, const Tensor& cond) const {
  // Stop-gradient: the predictor must not shape the text encoder.
  Tensor h = detach(text_hidden);  // [S,H]
  Tensor g = cond_proj_.forward_vec(cond);
  Tensor x = transpose(h);  // [H,S]
  x = relu(add_colwise(c1_.forward(x), g));
  x = relu(c2_.forward(x));
  Tensor per_phoneme = out_.forward(transpose(x));  // [S,1]
  return reshape(per_phoneme, {per_phoneme.shape()[0]});
}

std::vector<int> DurationPredictor::to_frame_counts(const std::vector<double>& log_durations) {
  std::vector<int> out(log_durations.size());
  for (std::size_t i = 0; i < log_durations.size(); ++i) {
    out[i] = std::max(1, static_cast<int>(std::lround(std::exp(log_durations[i]))));
  }
  return out;
}

Decoder::Decoder(const BackboneConfig& cfg, int hop_length, Rng& rng)
    : pre_("decoder.pre", cfg.latent_channels, cfg.decoder_channels, 7, rng),
      cond_proj_("decoder.cond", cfg.d_cond, cfg.decoder_channels, rng),
      post_("decoder.post", std::max(cfg.decoder_channels >> static_cast<int>(cfg.upsample.size()), 4),
            1, 7, rng) {
  int prod = 1;
  for (int u : cfg.upsample) prod *= u;
  if (prod != hop_length) {
    throw ValidationError("decoder: upsample product must equal hop_length");
  }
  int ch = cfg.decoder_channels;
  register_child("pre", pre_);
  register_child("cond", cond_proj_);
  for (std::size_t i = 0; i < cfg.upsample.size(); ++i) {
    const int u = cfg.upsample[i];
    const int next = std::max(ch / 2, 4);
    Stage stage;
    stage.up = std::make_unique<ConvTranspose1d>("decoder.up" + std::to_string(i), ch, next,
                                                 2 * u, u, rng);
    stage.res_a = std::make_unique<Conv1d>("decoder.res" + std::to_string(i) + "a", next,
                                           next, 3, rng, 1, -1, 1);
    stage.res_b = std::make_unique<Conv1d>("decoder.res" + std::to_string(i) + "b", next,
                                           next, 3, rng, 1, -1, 3);
    register_child("up" + std::to_string(i), *stage.up);
    register_child("res" + std::to_string(i) + "a", *stage.res_a);
    register_child("res" + std::to_string(i) + "b", *stage.res_b);
    stages_.push_back(std::move(stage));
    ch = next;
  }
  register_child("post", post_);
}

Tensor Decoder::forward(const Tensor& z, const Tensor& cond) const {
  if (z.shape().size() != 2) throw ValidationError("decoder: expected [C,T] latent");
  Tensor x = add_colwise(pre_.forward(z), cond_proj_.forward_vec(cond));
  for (const auto& stage : stages_) {
    x = stage.up->forward(leaky_relu(x));
    x = add(x, stage.res_a->forward(leaky_relu(x)));
    x = add(x, stage.res_b->forward(leaky_relu(x)));
  }
  Tensor wav = tanh_t(post_.forward(leaky_relu(x)));  // [1, N]
  return reshape(wav, {wav.shape()[1]});
}

Synthesizer::Synthesizer(const ModelConfig& cfg_in, Rng& rng)
    : config([&] {
        ModelConfig c = cfg_in;
        c.finalize();
        return c;
      }()),
      text_encoder(config.backbone, rng),
      posterior_encoder(config.backbone, config.features.num_bins(), rng),
      flow(config.backbone, rng),
      duration_predictor(config.backbone, rng),
      decoder(config.backbone, config.features.hop_length, rng),
      scene_encoder(config.scene, rng),
      speaker_encoder(config.speaker, rng),
      fuse_scene_proj("fuse.scene", config.scene.d_scene, config.backbone.d_cond, rng,
                      /*bias=*/false),
      fuse_speaker_proj("fuse.speaker", config.speaker.d_spk, config.backbone.d_cond, rng,
                        /*bias=*/false) {
  default_speaker = make_param("default_speaker", {config.speaker.d_spk});
  for (double& v : default_speaker.value()) v = rng.normal(0.0, 0.1);
  register_child("text", text_encoder);
  register_child("posterior", posterior_encoder);
  register_child("flow", flow);
  register_child("duration", duration_predictor);
  register_child("decoder", decoder);
  register_child("scene", scene_encoder);
  register_child("speaker", speaker_encoder);
  register_child("fuse_scene", fuse_scene_proj);
  register_child("fuse_speaker", fuse_speaker_proj);
}

Tensor Synthesizer::fuse_scene_part(const Tensor& scene_embedding) const {
  return fuse_scene_proj.forward_vec(scene_embedding);
}

Tensor Synthesizer::fuse_speaker_part(const Tensor& speaker_embedding) const {
  return fuse_speaker_proj.forward_vec(speaker_embedding);
}

Tensor Synthesizer::fuse(const Tensor& scene_embedding, const Tensor& speaker_embedding) const {
  return add(fuse_scene_part(scene_embedding), fuse_speaker_part(speaker_embedding));
}

Tensor Synthesizer::default_speaker_embedding() const {
  return l2_normalize(default_speaker);
}

AudioClip Synthesizer::synthesize(const SynthesisRequest& request) const {
  if (request.text_ids.empty()) throw ValidationError("synthesize: empty text");

  Tensor scene_emb;
  if (config.scene.backbone == "file") {
    if (request.scene_feature.empty()) {
      throw ValidationError("synthesize: file backbone requires a precomputed scene feature");
    }
    scene_emb = scene_encoder.encode_feature(Tensor::from_values(
        request.scene_feature, {static_cast<int>(request.scene_feature.size())}));
  } else {
    if (request.image == nullptr) {
      throw ValidationError("synthesize: builtin backbone requires an image");
    }
    scene_emb = scene_encoder.encode_image(*request.image);
  }

  Tensor spk_emb = request.speaker_ref != nullptr
                       ? speaker_encoder.forward(*request.speaker_ref)
                       : default_speaker_embedding();
  Tensor cond = fuse(scene_emb, spk_emb);

  const TextEncoding text = text_encoder.forward(request.text_ids);
  const Tensor log_dur = duration_predictor.forward(text.hidden, cond);
  const std::vector<int> durations = DurationPredictor::to_frame_counts(log_dur.value());

  std::vector<int> frame_ids;
  for (std::size_t s = 0; s < durations.size(); ++s) {
    for (int i = 0; i < durations[s]; ++i) frame_ids.push_back(static_cast<int>(s));
  }
  const int frames = static_cast<int>(frame_ids.size());
  const int c = config.backbone.latent_channels;

  Tensor mu_p = gather_rows(text.mu, frame_ids);      // [T,C]
  Tensor logs_p = gather_rows(text.logs, frame_ids);  // [T,C]

  const double temp = request.temperature.value_or(config.backbone.temperature);
  Rng rng(request.seed);
  std::vector<double> noise(static_cast<std::size_t>(frames) * c);
  for (double& v : noise) v = rng.normal() * temp;
  Tensor eps = Tensor::from_values(std::move(noise), {frames, c});

  Tensor u = add(mu_p, mul(exp_t(logs_p), eps));  // [T,C]
  Tensor z = flow.inverse(transpose(u), cond);    // [C,T]
  Tensor wav = decoder.forward(z, cond);

  AudioClip out;
  out.sample_rate = config.features.sample_rate;
  out.samples = wav.value();
  out.validate("synthesized audio");
  return out;
}

std::vector<double> alignment_log_likelihood(const std::vector<double>& u_tc, int frames,
                                             const std::vector<double>& mu_sc,
                                             const std::vector<double>& logs_sc, int phonemes,
                                             int channels) {
  constexpr double kLogTwoPi = 1.8378770664093454836;
  std::vector<double> out(static_cast<std::size_t>(frames) * phonemes, 0.0);
  for (int t = 0; t < frames; ++t) {
    for (int s = 0; s < phonemes; ++s) {
      double acc = 0.0;
      for (int ch = 0; ch < channels; ++ch) {
        const double logs = logs_sc[static_cast<std::size_t>(s) * channels + ch];
        const double d = (u_tc[static_cast<std::size_t>(t) * channels + ch] -
                          mu_sc[static_cast<std::size_t>(s) * channels + ch]) *
                         std::exp(-logs);
        acc += -0.5 * (kLogTwoPi + d * d) - logs;
      }
      out[static_cast<std::size_t>(t) * phonemes + s] = acc;
    }
  }
  return out;
}

std::vector<int> expand_ids(const AlignmentPath& path) {
  return path.frame_to_phoneme;
}

}  // namespace scenetts
