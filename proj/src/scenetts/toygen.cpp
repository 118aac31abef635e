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

#include "scenetts/toygen.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "scenetts/errors.hpp"

namespace scenetts {

namespace fs = std::filesystem;

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Two-pole resonator at f_hz with bandwidth bw_hz.
struct Resonator {
  double b0 = 1.0, a1 = 0.0, a2 = 0.0;
  double z1 = 0.0, z2 = 0.0;

  void set(double f_hz, double bw_hz, int sample_rate) {
    const double r = std::exp(-kTwoPi * bw_hz / (2.0 * sample_rate));
    a1 = 2.0 * r * std::cos(kTwoPi * f_hz / sample_rate);
    a2 = -r * r;
    b0 = 1.0 - r;
  }

  double tick(double x) {
    const double y = b0 * x + a1 * z1 + a2 * z2;
    z2 = z1;
    z1 = y;
    return y;
  }
};

}  // namespace

AudioClip make_speechlike(Rng& rng, int sample_rate, double seconds,
                          const SpeakerProfile& profile) {
  if (sample_rate <= 0 || seconds <= 0.0) {
    throw ValidationError("make_speechlike: bad sample rate or duration");
  }
  const std::size_t n = static_cast<std::size_t>(seconds * sample_rate);
  AudioClip clip;
  clip.sample_rate = sample_rate;
  clip.samples.assign(n, 0.0);

  Resonator r1, r2;
  double phase = 0.0;
  double f1 = profile.formant1_hz, f2 = profile.formant2_hz;
  double syllable_left = 0.0;
  bool voiced = true;
  double env = 0.0;

  for (std::size_t i = 0; i < n; ++i) {
    if (syllable_left <= 0.0) {
      // New syllable or short pause; formants wander per syllable.
      voiced = rng.uniform() > 0.2;
      syllable_left = rng.uniform(0.08, 0.18) * sample_rate;
      f1 = profile.formant1_hz * rng.uniform(0.8, 1.25);
      f2 = profile.formant2_hz * rng.uniform(0.85, 1.2);
      r1.set(f1, 90.0, sample_rate);
      r2.set(f2, 140.0, sample_rate);
    }
    syllable_left -= 1.0;

    const double target = voiced ? 1.0 : 0.05;
    env += (target - env) * 0.002;

    // Glottal-ish excitation: narrow pulse per period plus faint noise.
    phase += profile.f0_hz / sample_rate;
    double excitation = rng.normal(0.0, 0.01);
    if (phase >= 1.0) {
      phase -= 1.0;
      excitation += 1.0;
    }
    const double s = (r1.tick(excitation) + 0.6 * r2.tick(excitation)) * env;
    clip.samples[i] = s;
  }

  double peak = 0.0;
  for (double s : clip.samples) peak = std::max(peak, std::abs(s));
  if (peak > 0.0) {
    for (double& s : clip.samples) s *= 0.7 / peak;
  }
  return clip;
}

RoomImpulseResponse make_exp_decay_rir(Rng& rng, int sample_rate, double t60_seconds,
                                       double tail_seconds) {
  if (t60_seconds < 0.0) throw ValidationError("make_exp_decay_rir: t60 must be >= 0");
  if (tail_seconds <= 0.0) tail_seconds = std::max(1.5 * t60_seconds, 0.05);
  const std::size_t n = static_cast<std::size_t>(tail_seconds * sample_rate);
  RoomImpulseResponse rir;
  rir.sample_rate = sample_rate;
  rir.samples.assign(std::max<std::size_t>(n, 1), 0.0);
  rir.samples[0] = 1.0;  // direct path
  if (t60_seconds > 0.0) {
    // 60 dB energy decay at t60: envelope exp(-alpha t) with alpha = ln(10^3)/t60.
    const double alpha = 6.907755278982137 / t60_seconds;
    for (std::size_t i = 1; i < rir.samples.size(); ++i) {
      const double t = static_cast<double>(i) / sample_rate;
      rir.samples[i] = 0.35 * rng.normal() * std::exp(-alpha * t);
    }
  }
  rir.rt60 = t60_seconds;
  return rir;
}

SceneImage make_scene_image(Rng& rng, int size, int reverb_class) {
  if (size < 8) throw ValidationError("make_scene_image: size too small");
  // One base hue per class, far apart in RGB.
  static const double kBase[][3] = {
      {0.85, 0.25, 0.2}, {0.2, 0.75, 0.3}, {0.2, 0.35, 0.9}, {0.9, 0.8, 0.2},
      {0.7, 0.3, 0.8},   {0.3, 0.8, 0.8}, {0.6, 0.6, 0.6},  {0.9, 0.5, 0.1}};
  const int kNumBase = 8;
  const double* base = kBase[reverb_class % kNumBase];

  SceneImage img;
  img.height = size;
  img.width = size;
  img.pixels.resize(static_cast<std::size_t>(size) * size * 3);
  // Class-dependent texture: wider classes get coarse horizontal banding,
  // narrower ones fine vertical stripes.
  const double stripe_freq = 2.0 + 3.0 * reverb_class;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double band = 0.08 * std::sin(kTwoPi * stripe_freq * (reverb_class % 2 ? x : y) / size);
      for (int c = 0; c < 3; ++c) {
        const double noise = 0.03 * (rng.uniform() - 0.5);
        img.at(y, x, c) = std::clamp(base[c] + band + noise, 0.0, 1.0);
      }
    }
  }
  return img;
}

std::vector<double> pseudo_backbone_feature(const SceneImage& image, int dim) {
  image.validate("pseudo_backbone_feature");
  if (dim < 8) throw ValidationError("pseudo_backbone_feature: dim must be >= 8");

  // Color moments.
  double mean[3] = {0, 0, 0}, var[3] = {0, 0, 0};
  const std::size_t npix = static_cast<std::size_t>(image.height) * image.width;
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      for (int c = 0; c < 3; ++c) mean[c] += image.at(y, x, c);
  for (int c = 0; c < 3; ++c) mean[c] /= static_cast<double>(npix);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      for (int c = 0; c < 3; ++c) {
        const double d = image.at(y, x, c) - mean[c];
        var[c] += d * d;
      }
  for (int c = 0; c < 3; ++c) var[c] /= static_cast<double>(npix);

  // Content hash seeds the remaining dimensions.
  std::uint64_t h = 1469598103934665603ULL;
  for (double p : image.pixels) {
    const auto q = static_cast<std::uint64_t>(std::llround(p * 255.0));
    h = (h ^ q) * 1099511628211ULL;
  }
  Rng rng(h);

  std::vector<double> feat(static_cast<std::size_t>(dim));
  for (int c = 0; c < 3; ++c) {
    feat[static_cast<std::size_t>(c)] = 4.0 * (mean[c] - 0.5);
    feat[static_cast<std::size_t>(3 + c)] = 8.0 * std::sqrt(var[c]);
  }
  for (int i = 6; i < dim; ++i) feat[static_cast<std::size_t>(i)] = 0.5 * rng.normal();
  return feat;
}

void generate_toy_corpus(const ToyCorpusOptions& options) {
  if (options.num_utterances < 1) throw ValidationError("toy corpus: need >= 1 utterance");
  validate_bins({0.3});  // cheap sanity for the includes; real bins live in the config
  const fs::path root(options.out_dir);
  fs::create_directories(root / "clean");
  fs::create_directories(root / "rir");
  fs::create_directories(root / "image");

  Rng rng(options.seed);

  static const char* kSentences[] = {
      "the cat sat on the mat",
      "a quick brown fox jumps over the lazy dog",
      "she sells sea shells by the sea shore",
      "pack my box with five dozen jugs",
      "how much wood would a woodchuck chuck",
      "the rain in spain stays mainly on the plain",
      "all good things come to those who wait",
      "a stitch in time saves nine",
      "many hands make light work",
      "practice makes perfect every day",
      "better late than never they say",
      "the early bird catches the worm",
  };
  const int num_sentences = static_cast<int>(sizeof(kSentences) / sizeof(kSentences[0]));

  const SpeakerProfile speakers[2] = {{118.0, 560.0, 1680.0}, {205.0, 760.0, 2100.0}};

  for (int i = 0; i < options.num_utterances; ++i) {
    const int spk = i % 2;
    const double seconds = rng.uniform(options.min_seconds, options.max_seconds);
    const AudioClip clip = make_speechlike(rng, options.sample_rate, seconds, speakers[spk]);
    char name[64];
    std::snprintf(name, sizeof(name), "spk%d_utt%02d", spk + 1, i);
    write_wav((root / "clean" / (std::string(name) + ".wav")).string(), clip);
    std::ofstream txt(root / "clean" / (std::string(name) + ".txt"));
    txt << kSentences[i % num_sentences] << "\n";
  }

  nlohmann::json features_lines = nlohmann::json::array();
  for (std::size_t k = 0; k < options.rir_t60.size(); ++k) {
    const RoomImpulseResponse rir =
        make_exp_decay_rir(rng, options.sample_rate, options.rir_t60[k]);
    const std::string stem = "rir" + std::to_string(k);
    AudioClip rir_clip{rir.samples, rir.sample_rate};
    write_wav((root / "rir" / (stem + ".wav")).string(), rir_clip);

    const SceneImage img = make_scene_image(rng, options.image_size, static_cast<int>(k));
    const std::string image_path = (root / "image" / (stem + ".png")).string();
    write_png(image_path, img);

    // Feature must be computed from the image as written to disk (8-bit), so
    // any consumer reading the PNG sees a consistent pairing.
    const SceneImage reread = read_png(image_path);
    features_lines.push_back(nlohmann::json{
        {"image_path", image_path},
        {"feature", pseudo_backbone_feature(reread, options.feature_dim)}});
  }

  std::ofstream ff(root / "scene_features.jsonl");
  for (const auto& line : features_lines) ff << line.dump() << "\n";
}

}  // namespace scenetts
