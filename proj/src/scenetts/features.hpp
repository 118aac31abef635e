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

#include <string>
#include <vector>

#include <json.hpp>

#include "scenetts/audio.hpp"
#include "scenetts/tensor.hpp"

namespace scenetts {

/// Time-frequency front-end configuration. Serialized inside checkpoints and
/// manifests so every consumer analyzes audio identically.
///
/// Framing convention (fixed): the signal is reflect-padded by win_length/2
/// on each side, frames start at i*hop_length in the padded signal, and the
/// frame count is T = 1 + floor((num_samples - 1) / hop_length).
struct FeatureParams {
  int sample_rate = 22050;
  int n_fft = 1024;
  int hop_length = 256;
  int win_length = 1024;
  int n_mels = 80;
  double fmin = 0.0;
  double fmax = 8000.0;
  double log_floor = 1e-5;

  void validate() const;
  int num_frames(std::size_t num_samples) const;
  int num_bins() const { return n_fft / 2 + 1; }

  nlohmann::json to_json() const;
  static FeatureParams from_json(const nlohmann::json& j);

  bool operator==(const FeatureParams&) const = default;
};

/// T frames x M mel bins of log-amplitude mel energies.
struct MelSpectrogram {
  int frames = 0;
  int n_mels = 0;
  std::vector<double> values;  // row-major [frames, n_mels]
  FeatureParams params;

  double at(int t, int m) const {
    return values[static_cast<std::size_t>(t) * n_mels + m];
  }
};

/// T frames x D cepstral coefficients (c_1..c_D; c_0 dropped).
struct CepstralFrames {
  int frames = 0;
  int dim = 0;
  std::vector<double> values;  // row-major [frames, dim]

  double at(int t, int d) const {
    return values[static_cast<std::size_t>(t) * dim + d];
  }
};

/// Triangular mel filterbank (HTK mel scale), row-major [n_mels, num_bins].
std::vector<double> mel_filterbank(const FeatureParams& params);

/// Center frequency (Hz) of mel filter m, useful for constructing test tones.
double mel_filter_center_hz(const FeatureParams& params, int m);

/// Magnitude STFT, row-major [T, num_bins]. frames_out receives T.
std::vector<double> linear_spectrogram(const AudioClip& audio, const FeatureParams& params,
                                       int* frames_out);

MelSpectrogram mel_spectrogram(const AudioClip& audio, const FeatureParams& params);

/// Mel cepstra via orthonormal DCT-II of each log-mel frame, keeping
/// coefficients 1..D (the energy coefficient c_0 is dropped).
CepstralFrames mel_cepstra(const AudioClip& audio, const FeatureParams& params, int D);

/// Orthonormal DCT-II of one frame (all n coefficients). Exposed for tests.
std::vector<double> dct2_orthonormal(const std::vector<double>& x);
std::vector<double> idct2_orthonormal(const std::vector<double>& c);

/// Differentiable mel analysis over waveform tensors. Shares the exact
/// framing/window/filterbank definitions with the fast path above, expressed
/// through autodiff ops so gradients reach the waveform.
class MelAnalyzer {
 public:
  explicit MelAnalyzer(const FeatureParams& params);

  /// wav [N] -> log-mel [T, n_mels].
  Tensor log_mel(const Tensor& wav) const;

  const FeatureParams& params() const { return params_; }

 private:
  FeatureParams params_;
  Tensor window_;     // [win_length]
  Tensor cos_basis_;  // [n_fft, bins]
  Tensor sin_basis_;  // [n_fft, bins]
  Tensor mel_fb_t_;   // [bins, n_mels]
};

}  // namespace scenetts
