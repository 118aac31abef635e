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

#include "scenetts/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "scenetts/backbone.hpp"
#include "scenetts/checkpoint.hpp"
#include "scenetts/errors.hpp"
#include "scenetts/evalsuite.hpp"
#include "scenetts/src_classifier.hpp"

namespace scenetts {

namespace fs = std::filesystem;

double StepReport::weighted_sum() const {
  double acc = 0.0;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    acc += weights[i].second * terms[i].second;
  }
  return acc;
}

nlohmann::json StepReport::to_json() const {
  nlohmann::json jt = nlohmann::json::object();
  nlohmann::json jw = nlohmann::json::object();
  for (std::size_t i = 0; i < terms.size(); ++i) {
    jt[terms[i].first] = terms[i].second;
    jw[weights[i].first] = weights[i].second;
  }
  return nlohmann::json{{"type", "step"},   {"step", step},    {"terms", jt},
                        {"weights", jw},    {"total", total},  {"seconds", seconds}};
}

namespace {

struct MelExample {
  std::string id;
  MelSpectrogram mel;
  int reverb_class = 0;
};

std::vector<MelExample> load_mel_examples(const Manifest& manifest, Split split) {
  std::vector<MelExample> out;
  for (const ManifestEntry* e : manifest.split_entries(split)) {
    const CorpusItem item = load_corpus_item(*e, manifest.features.sample_rate);
    MelExample ex;
    ex.id = fs::path(e->clean_audio_path).stem().string();
    ex.mel = mel_spectrogram(item.reverberant, manifest.features);
    ex.reverb_class = e->reverb_class;
    out.push_back(std::move(ex));
  }
  return out;
}

double accuracy(const SrcClassifier& src, const std::vector<MelExample>& examples) {
  if (examples.empty()) return 0.0;
  int correct = 0;
  for (const auto& ex : examples) {
    if (src.predict(ex.mel) == ex.reverb_class) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

}  // namespace

SrcPretrainResult pretrain_src(const Manifest& manifest, const RunConfig& config,
                               const std::string& out_checkpoint) {
  config.src_train.validate();
  if (manifest.features != config.features) {
    throw ValidationError("pretrain_src: manifest feature params differ from config");
  }
  if (manifest.classes_present(Split::train) < 2) {
    throw ValidationError("pretrain_src: train split must contain at least 2 reverb classes");
  }

  const std::vector<MelExample> train_set = load_mel_examples(manifest, Split::train);
  const std::vector<MelExample> val_set = load_mel_examples(manifest, Split::val);

  SrcClassifierConfig src_cfg = config.src;
  src_cfg.n_mels = manifest.features.n_mels;
  src_cfg.num_classes = manifest.num_classes;

  Rng init_rng(config.seed);
  SrcClassifier src(src_cfg, init_rng);

  SrcSnapshot snapshot;
  snapshot.src = src_cfg;
  snapshot.features = manifest.features;
  snapshot.bins = manifest.bins;
  snapshot.init_seed = config.seed;

  if (config.src_train.epochs > 0) {
    AdamWConfig opt_cfg;
    opt_cfg.lr = config.src_train.lr;
    opt_cfg.weight_decay = config.src_train.weight_decay;
    AdamW optimizer(src.parameters(), opt_cfg);

    Rng order_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<std::size_t> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    const int batch = config.src_train.batch_size;
    for (int epoch = 0; epoch < config.src_train.epochs; ++epoch) {
      order_rng.shuffle(order);
      for (std::size_t pos = 0; pos < order.size(); pos += static_cast<std::size_t>(batch)) {
        const std::size_t end = std::min(order.size(), pos + static_cast<std::size_t>(batch));
        optimizer.zero_grad();
        Tensor loss = Tensor::scalar(0.0);
        for (std::size_t i = pos; i < end; ++i) {
          const MelExample& ex = train_set[order[i]];
          loss = add(loss, SrcClassifier::loss(src.forward(ex.mel), ex.reverb_class));
        }
        loss = mul_scalar(loss, 1.0 / static_cast<double>(end - pos));
        if (!std::isfinite(loss.item())) {
          throw RuntimeFault("pretrain_src: non-finite loss in epoch " + std::to_string(epoch));
        }
        backward(loss);
        optimizer.step();
      }
    }
  }

  save_checkpoint(out_checkpoint, "src", src_snapshot_to_json(snapshot), src.parameters());

  SrcPretrainResult result;
  result.checkpoint_path = out_checkpoint;
  result.train_accuracy = accuracy(src, train_set);
  result.val_accuracy = val_set.empty() ? result.train_accuracy : accuracy(src, val_set);
  result.epochs_run = config.src_train.epochs;
  return result;
}

std::unique_ptr<SrcClassifier> load_src(const std::string& path, SrcSnapshot* snapshot_out) {
  const SrcSnapshot snapshot = src_snapshot_from_json(peek_checkpoint(path, "src"));
  Rng rng(snapshot.init_seed);
  auto src = std::make_unique<SrcClassifier>(snapshot.src, rng);
  load_checkpoint_params(path, "src", src->parameters());
  if (snapshot_out != nullptr) *snapshot_out = snapshot;
  return src;
}

std::unique_ptr<Synthesizer> load_synthesizer(const std::string& path) {
  const ModelConfig cfg = model_config_from_json(peek_checkpoint(path, "tts"));
  Rng rng(cfg.init_seed);
  auto model = std::make_unique<Synthesizer>(cfg, rng);
  load_checkpoint_params(path, "tts", model->parameters());
  return model;
}

void save_synthesizer(const std::string& path, const Synthesizer& model) {
  save_checkpoint(path, "tts", model_config_to_json(model.config), model.parameters());
}

namespace {

struct TrainUtterance {
  std::string id;
  AudioClip reverberant;
  Tensor log_spec;       // [bins, T] log-magnitude
  int spec_frames = 0;
  Tensor ref_mel;        // [T_mel, n_mels] of the reverberant target
  std::vector<int> text_ids;
  int reverb_class = 0;
  Tensor scene_feature;  // file backbone
  SceneImage image;      // builtin backbone
};

TrainUtterance load_train_utterance(const ManifestEntry& entry, const Manifest& manifest,
                                    const TextFrontend& frontend,
                                    const FileBackbone* file_backbone, bool builtin_scene) {
  TrainUtterance u;
  u.id = fs::path(entry.clean_audio_path).stem().string();
  const CorpusItem item = load_corpus_item(entry, manifest.features.sample_rate);
  u.reverberant = item.reverberant;

  int frames = 0;
  std::vector<double> mag = linear_spectrogram(u.reverberant, manifest.features, &frames);
  const int bins = manifest.features.num_bins();
  std::vector<double> log_spec(static_cast<std::size_t>(bins) * frames);
  for (int t = 0; t < frames; ++t) {
    for (int b = 0; b < bins; ++b) {
      log_spec[static_cast<std::size_t>(b) * frames + t] =
          std::log(std::max(mag[static_cast<std::size_t>(t) * bins + b], 1e-5));
    }
  }
  u.log_spec = Tensor::from_values(std::move(log_spec), {bins, frames});
  u.spec_frames = frames;

  const MelSpectrogram mel = mel_spectrogram(u.reverberant, manifest.features);
  u.ref_mel = Tensor::from_values(mel.values, {mel.frames, mel.n_mels});

  u.text_ids = frontend.to_ids(entry.transcript);
  u.reverb_class = entry.reverb_class;

  if (builtin_scene) {
    u.image = read_png(entry.image_path);
  } else {
    const std::vector<double>& feat = file_backbone->lookup(entry.image_path);
    u.scene_feature = Tensor::from_values(feat, {static_cast<int>(feat.size())});
  }
  return u;
}

// Minimal multi-scale waveform discriminator for the optional adversarial
// arm (least-squares objective plus feature matching).
class WaveDiscriminator : public Module {
 public:
  explicit WaveDiscriminator(Rng& rng)
      : a1_("disc.a1", 1, 16, 15, rng, 4), a2_("disc.a2", 16, 32, 15, rng, 4),
        a3_("disc.a3", 32, 1, 3, rng),
        b1_("disc.b1", 1, 16, 15, rng, 4), b2_("disc.b2", 16, 32, 15, rng, 4),
        b3_("disc.b3", 32, 1, 3, rng) {
    register_child("a1", a1_);
    register_child("a2", a2_);
    register_child("a3", a3_);
    register_child("b1", b1_);
    register_child("b2", b2_);
    register_child("b3", b3_);
  }

  struct Out {
    std::vector<Tensor> features;
    std::vector<Tensor> logits;
  };

  Out forward(const Tensor& wav) const {
    Out out;
    Tensor x = reshape(wav, {1, static_cast<int>(wav.numel())});
    Tensor h = leaky_relu(a1_.forward(x));
    out.features.push_back(h);
    h = leaky_relu(a2_.forward(h));
    out.features.push_back(h);
    out.logits.push_back(a3_.forward(h));

    // Second scale: decimated waveform.
    std::vector<std::int64_t> idx;
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(wav.numel()); i += 2) {
      idx.push_back(i);
    }
    Tensor x2 = reshape(gather_flat(wav, idx), {1, static_cast<int>(idx.size())});
    Tensor g = leaky_relu(b1_.forward(x2));
    out.features.push_back(g);
    g = leaky_relu(b2_.forward(g));
    out.features.push_back(g);
    out.logits.push_back(b3_.forward(g));
    return out;
  }

 private:
  Conv1d a1_, a2_, a3_, b1_, b2_, b3_;
};

Tensor mean_square_to(const Tensor& x, double target) {
  return mean(square(add_scalar(x, -target)));
}

}  // namespace

TrainResult train_synthesizer(const Manifest& manifest, const std::string& src_checkpoint,
                              const RunConfig& config, const std::string& out_dir) {
  config.train.validate();
  if (manifest.features != config.features) {
    throw ValidationError("train: manifest feature params differ from config");
  }
  if (manifest.bins != config.bins) {
    throw ValidationError("train: manifest reverb bins differ from config");
  }

  const ModelConfig model_cfg = config.model_config();
  const bool use_src = config.train.lambda_src > 0.0;
  const bool use_scene_ce = config.train.lambda_scene > 0.0;
  const bool use_adv = config.train.lambda_adv > 0.0;
  const bool builtin_scene = model_cfg.scene.backbone == "builtin";

  if (use_src && src_checkpoint.empty()) {
    throw ValidationError("train: lambda_src > 0 requires --src-checkpoint");
  }
  if (model_cfg.backbone.segment_frames < config.src.min_frames && use_src) {
    throw ValidationError("train: segment_frames must be >= src.min_frames for the SRC loss");
  }

  fs::create_directories(out_dir);

  // Frozen critic.
  std::unique_ptr<SrcClassifier> src;
  std::uint64_t src_hash_before = 0;
  if (use_src) {
    SrcSnapshot snapshot;
    src = load_src(src_checkpoint, &snapshot);
    if (snapshot.features != manifest.features) {
      throw ValidationError("train: SRC checkpoint feature params differ from manifest");
    }
    if (snapshot.src.num_classes != manifest.num_classes) {
      throw ValidationError("train: SRC checkpoint class count differs from manifest");
    }
    src->freeze();
    src_hash_before = src->param_hash();
  }

  // Data.
  std::unique_ptr<FileBackbone> file_backbone;
  if (!builtin_scene) {
    if (config.scene_features_file.empty()) {
      throw ValidationError("train: scene.backbone=file requires scene.features_file");
    }
    file_backbone = std::make_unique<FileBackbone>(FileBackbone::load(config.scene_features_file));
    if (file_backbone->feature_dim() != model_cfg.scene.feature_dim) {
      throw ValidationError("train: scene features file dimension " +
                            std::to_string(file_backbone->feature_dim()) +
                            " != scene.feature_dim " +
                            std::to_string(model_cfg.scene.feature_dim));
    }
  }

  CharFrontend frontend(model_cfg.backbone.vocab);
  std::vector<TrainUtterance> data;
  for (const ManifestEntry* e : manifest.split_entries(Split::train)) {
    data.push_back(
        load_train_utterance(*e, manifest, frontend, file_backbone.get(), builtin_scene));
  }
  if (data.empty()) throw ValidationError("train: empty train split");
  const auto val_entries = manifest.split_entries(Split::val);

  // Model + optimizers.
  Rng init_rng(config.seed);
  Synthesizer model(model_cfg, init_rng);

  AdamWConfig opt_cfg;
  opt_cfg.lr = config.train.lr;
  opt_cfg.beta1 = config.train.beta1;
  opt_cfg.beta2 = config.train.beta2;
  opt_cfg.weight_decay = config.train.weight_decay;
  AdamW optimizer(model.parameters(), opt_cfg);

  std::unique_ptr<WaveDiscriminator> disc;
  std::unique_ptr<AdamW> disc_optimizer;
  if (use_adv) {
    Rng disc_rng(config.seed ^ 0xD15CULL);
    disc = std::make_unique<WaveDiscriminator>(disc_rng);
    disc_optimizer = std::make_unique<AdamW>(disc->parameters(), opt_cfg);
  }

  MelAnalyzer analyzer(manifest.features);
  const int hop = manifest.features.hop_length;
  const int latent = model_cfg.backbone.latent_channels;

  Rng order_rng(config.seed ^ 0xDA7AULL);
  Rng noise_rng(config.seed ^ 0x5EEDULL);
  Rng segment_rng(config.seed ^ 0x5E65ULL);

  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  order_rng.shuffle(order);
  std::size_t cursor = 0;

  const std::string metrics_path = (fs::path(out_dir) / "metrics.jsonl").string();
  std::ofstream metrics(metrics_path, std::ios::trunc);
  if (!metrics) throw RuntimeFault("cannot write metrics log: " + metrics_path);

  std::vector<std::string> term_names = {"recon", "kl", "dur"};
  if (use_scene_ce) term_names.push_back("scene");
  if (use_src) term_names.push_back("src");
  if (use_adv) term_names.push_back("adv");

  TrainResult result;
  result.metrics_path = metrics_path;
  result.term_names = term_names;

  std::vector<double> first10, last10;

  for (int step = 1; step <= config.train.max_steps; ++step) {
    const auto t_start = std::chrono::steady_clock::now();

    // Next batch (reshuffle per epoch).
    std::vector<const TrainUtterance*> batch;
    for (int b = 0; b < config.train.batch_size; ++b) {
      if (cursor >= order.size()) {
        order_rng.shuffle(order);
        cursor = 0;
      }
      batch.push_back(&data[order[cursor++]]);
    }

    Tensor recon_sum = Tensor::scalar(0.0);
    Tensor kl_sum = Tensor::scalar(0.0);
    Tensor dur_sum = Tensor::scalar(0.0);
    Tensor scene_sum = Tensor::scalar(0.0);
    Tensor src_sum = Tensor::scalar(0.0);
    Tensor adv_sum = Tensor::scalar(0.0);
    Tensor disc_sum = Tensor::scalar(0.0);

    for (const TrainUtterance* u : batch) {
      // Conditioning.
      Tensor scene_emb = builtin_scene ? model.scene_encoder.encode_image(u->image)
                                       : model.scene_encoder.encode_feature(u->scene_feature);
      Tensor spk_emb = model.speaker_encoder.forward(u->ref_mel);
      Tensor cond = model.fuse(scene_emb, spk_emb);

      // Posterior sample.
      const PosteriorEncoder::Out post = model.posterior_encoder.forward(u->log_spec, cond);
      const int frames = u->spec_frames;
      std::vector<double> eps(static_cast<std::size_t>(latent) * frames);
      for (double& v : eps) v = noise_rng.normal();
      Tensor z = add(post.mu, mul(exp_t(post.logs),
                                  Tensor::from_values(std::move(eps), {latent, frames})));

      // Flow with Gaussian transport (keeps the KL in closed form).
      const Flow::Transport tr = model.flow.transport(z, post.mu, post.logs, cond);

      // Text prior + alignment.
      const TextEncoding text = model.text_encoder.forward(u->text_ids);
      const int phonemes = static_cast<int>(u->text_ids.size());
      if (frames < phonemes) {
        throw ValidationError("train: utterance " + u->id + " has fewer frames (" +
                              std::to_string(frames) + ") than text ids (" +
                              std::to_string(phonemes) + ")");
      }
      const Tensor u_tc = transpose(tr.u);
      const std::vector<double> loglike = alignment_log_likelihood(
          u_tc.value(), frames, text.mu.value(), text.logs.value(), phonemes, latent);
      const AlignmentPath path = monotonic_alignment_search(loglike, frames, phonemes);

      // KL(q-transported || prior), elementwise closed form, >= 0.
      Tensor mu_p = gather_rows(text.mu, path.frame_to_phoneme);      // [T,C]
      Tensor logs_p = gather_rows(text.logs, path.frame_to_phoneme);  // [T,C]
      Tensor mu_t = transpose(tr.mu);
      Tensor logs_t = transpose(tr.logs);
      Tensor ratio = exp_t(mul_scalar(sub(logs_t, logs_p), 2.0));
      Tensor dmu = square(sub(mu_t, mu_p));
      Tensor kl_elem = add(sub(logs_p, logs_t),
                           add_scalar(mul_scalar(add(ratio, mul(dmu, exp_t(mul_scalar(logs_p, -2.0)))), 0.5),
                                      -0.5));
      Tensor kl = mean(kl_elem);
      if (kl.item() < -1e-9) {
        throw RuntimeFault("train: closed-form KL went negative (" +
                           std::to_string(kl.item()) + ")");
      }
      kl = relu(kl);

      // Duration loss in log domain against MAS durations.
      Tensor log_dur_pred = model.duration_predictor.forward(text.hidden, cond);
      std::vector<double> log_dur_target(path.durations.size());
      for (std::size_t s = 0; s < path.durations.size(); ++s) {
        log_dur_target[s] = std::log(static_cast<double>(path.durations[s]));
      }
      Tensor dur_loss = mse_loss(
          log_dur_pred, Tensor::from_values(std::move(log_dur_target), {phonemes}));

      // Reconstruction on a random latent segment.
      const int seg = std::min(model_cfg.backbone.segment_frames, frames);
      const int max_start = frames - seg;
      const int start =
          max_start > 0 ? static_cast<int>(segment_rng.uniform_index(
                              static_cast<std::uint64_t>(max_start + 1)))
                        : 0;
      Tensor z_seg = seg == frames ? z : slice_cols(z, start, start + seg);
      Tensor wav_hat = model.decoder.forward(z_seg, cond);  // [seg*hop]

      std::vector<double> y_seg(u->reverberant.samples.begin() + static_cast<std::ptrdiff_t>(start) * hop,
                                u->reverberant.samples.begin() +
                                    static_cast<std::ptrdiff_t>(start + seg) * hop);
      AudioClip y_clip{y_seg, manifest.features.sample_rate};
      const MelSpectrogram mel_tgt = mel_spectrogram(y_clip, manifest.features);
      Tensor mel_tgt_t = Tensor::from_values(mel_tgt.values, {mel_tgt.frames, mel_tgt.n_mels});
      Tensor mel_hat = analyzer.log_mel(wav_hat);
      Tensor recon = l1_loss(mel_hat, mel_tgt_t);

      recon_sum = add(recon_sum, recon);
      kl_sum = add(kl_sum, kl);
      dur_sum = add(dur_sum, dur_loss);

      if (use_scene_ce) {
        scene_sum = add(scene_sum, model.scene_encoder.class_loss(scene_emb, u->reverb_class));
      }
      if (use_src) {
        Tensor logits = src->forward(mel_hat);
        src_sum = add(src_sum, SrcClassifier::loss(logits, u->reverb_class));
      }
      if (use_adv) {
        Tensor y_t = Tensor::from_values(y_seg, {seg * hop});
        // Discriminator update on detached generator output.
        const WaveDiscriminator::Out d_real = disc->forward(y_t);
        const WaveDiscriminator::Out d_fake_detached = disc->forward(detach(wav_hat));
        Tensor d_loss = Tensor::scalar(0.0);
        for (std::size_t k = 0; k < d_real.logits.size(); ++k) {
          d_loss = add(d_loss, add(mean_square_to(d_real.logits[k], 1.0),
                                   mean_square_to(d_fake_detached.logits[k], 0.0)));
        }
        disc_sum = add(disc_sum, d_loss);

        // Generator side: least-squares adversarial + feature matching.
        const WaveDiscriminator::Out d_fake = disc->forward(wav_hat);
        Tensor g_adv = Tensor::scalar(0.0);
        for (std::size_t k = 0; k < d_fake.logits.size(); ++k) {
          g_adv = add(g_adv, mean_square_to(d_fake.logits[k], 1.0));
        }
        for (std::size_t k = 0; k < d_fake.features.size(); ++k) {
          g_adv = add(g_adv, l1_loss(d_fake.features[k], detach(d_real.features[k])));
        }
        adv_sum = add(adv_sum, g_adv);
      }
    }

    const double inv_b = 1.0 / static_cast<double>(batch.size());
    Tensor recon_mean = mul_scalar(recon_sum, inv_b);
    Tensor kl_mean = mul_scalar(kl_sum, inv_b);
    Tensor dur_mean = mul_scalar(dur_sum, inv_b);
    Tensor scene_mean = mul_scalar(scene_sum, inv_b);
    Tensor src_mean = mul_scalar(src_sum, inv_b);
    Tensor adv_mean = mul_scalar(adv_sum, inv_b);

    Tensor total = mul_scalar(recon_mean, config.train.lambda_recon);
    total = add(total, mul_scalar(kl_mean, config.train.lambda_kl));
    total = add(total, mul_scalar(dur_mean, config.train.lambda_dur));
    if (use_scene_ce) total = add(total, mul_scalar(scene_mean, config.train.lambda_scene));
    if (use_src) total = add(total, mul_scalar(src_mean, config.train.lambda_src));
    if (use_adv) total = add(total, mul_scalar(adv_mean, config.train.lambda_adv));

    StepReport report;
    report.step = step;
    report.terms = {{"recon", recon_mean.item()}, {"kl", kl_mean.item()},
                    {"dur", dur_mean.item()}};
    report.weights = {{"recon", config.train.lambda_recon},
                      {"kl", config.train.lambda_kl},
                      {"dur", config.train.lambda_dur}};
    if (use_scene_ce) {
      report.terms.emplace_back("scene", scene_mean.item());
      report.weights.emplace_back("scene", config.train.lambda_scene);
    }
    if (use_src) {
      report.terms.emplace_back("src", src_mean.item());
      report.weights.emplace_back("src", config.train.lambda_src);
    }
    if (use_adv) {
      report.terms.emplace_back("adv", adv_mean.item());
      report.weights.emplace_back("adv", config.train.lambda_adv);
    }
    report.total = total.item();

    for (const auto& [name, value] : report.terms) {
      if (!std::isfinite(value)) {
        std::string ids;
        for (const TrainUtterance* u : batch) ids += (ids.empty() ? "" : ",") + u->id;
        throw RuntimeFault("train: non-finite loss term '" + name + "' at step " +
                           std::to_string(step) + "; batch: " + ids);
      }
    }

    if (use_adv) {
      disc_optimizer->zero_grad();
      Tensor disc_mean = mul_scalar(disc_sum, inv_b);
      backward(disc_mean);
      disc_optimizer->step();
    }

    optimizer.zero_grad();
    backward(total);
    optimizer.step();

    const auto t_end = std::chrono::steady_clock::now();
    report.seconds = std::chrono::duration<double>(t_end - t_start).count();
    metrics << report.to_json().dump() << "\n";
    metrics.flush();

    if (step <= 10) first10.push_back(report.total);
    last10.push_back(report.total);
    if (last10.size() > 10) last10.erase(last10.begin());

    if (!val_entries.empty() && step % config.train.validate_every == 0) {
      double mcd_sum = 0.0;
      std::vector<SrePrediction> preds;
      for (std::size_t vi = 0; vi < val_entries.size(); ++vi) {
        const ManifestEntry* e = val_entries[vi];
        const CorpusItem item = load_corpus_item(*e, manifest.features.sample_rate);
        const MelSpectrogram mel_gt = mel_spectrogram(item.reverberant, manifest.features);
        SynthesisRequest sr;
        sr.text_ids = frontend.to_ids(e->transcript);
        sr.speaker_ref = &mel_gt;
        sr.seed = static_cast<std::uint64_t>(step) * 7919 + vi;
        SceneImage img;
        if (builtin_scene) {
          img = read_png(e->image_path);
          sr.image = &img;
        } else {
          sr.scene_feature = file_backbone->lookup(e->image_path);
        }
        const AudioClip synth = model.synthesize(sr);
        mcd_sum += mcd_db(item.reverberant, synth, manifest.features, config.eval.mcd_coeffs);
        if (use_src) {
          preds.push_back(
              {src->predict(mel_spectrogram(synth, manifest.features)), e->reverb_class});
        }
      }
      nlohmann::json vj{{"type", "val"},
                        {"step", step},
                        {"mcd_db", mcd_sum / static_cast<double>(val_entries.size())}};
      if (!preds.empty()) vj["sre_percent"] = sre_percent(preds);
      metrics << vj.dump() << "\n";
      metrics.flush();
    }

    if (step % config.train.checkpoint_every == 0) {
      char name[64];
      std::snprintf(name, sizeof(name), "ckpt_%06d.ckpt", step);
      save_synthesizer((fs::path(out_dir) / name).string(), model);
    }
    result.steps_run = step;
  }

  const std::string final_path = (fs::path(out_dir) / "ckpt_final.ckpt").string();
  save_synthesizer(final_path, model);
  result.final_checkpoint = final_path;

  const auto mean_of = [](const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
  };
  result.first10_mean_total = mean_of(first10);
  result.last10_mean_total = mean_of(last10);
  result.src_hash_before = src_hash_before;
  result.src_hash_after = use_src ? src->param_hash() : 0;
  return result;
}

}  // namespace scenetts
