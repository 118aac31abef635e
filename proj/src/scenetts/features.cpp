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

#include "scenetts/features.hpp"

#include <algorithm>
#include <cmath>

#include "scenetts/dsp.hpp"
#include "scenetts/errors.hpp"

namespace scenetts {

namespace {

constexpr double kPi = 3.14159265358979323846;

double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

std::vector<double> hann_window(int win) {
  std::vector<double> w(win);
  for (int i = 0; i < win; ++i) {
    w[i] = 0.5 * (1.0 - std::cos(2.0 * kPi * i / win));
  }
  return w;
}

// Reflect-padding index map: padded position p (relative to the original
// signal start, may be negative) -> source index.
std::int64_t reflect_index(std::int64_t p, std::int64_t len) {
  if (p < 0) p = -p;
  if (p >= len) p = 2 * len - 2 - p;
  if (p < 0 || p >= len) throw RuntimeFault("reflect_index: signal too short for padding");
  return p;
}

}  // namespace

void FeatureParams::validate() const {
  if (sample_rate <= 0) throw ValidationError("features: sample_rate must be positive");
  if (n_fft < 2) throw ValidationError("features: n_fft must be >= 2");
  if (hop_length <= 0) throw ValidationError("features: hop_length must be positive");
  if (win_length < 2 || win_length > n_fft) {
    throw ValidationError("features: need 2 <= win_length <= n_fft");
  }
  if (win_length % 2 != 0) throw ValidationError("features: win_length must be even");
  if (n_mels < 2) throw ValidationError("features: n_mels must be >= 2");
  if (fmin < 0.0 || fmax <= fmin) throw ValidationError("features: need 0 <= fmin < fmax");
  if (fmax > sample_rate / 2.0) {
    throw ValidationError("features: fmax " + std::to_string(fmax) +
                          " exceeds Nyquist for sample_rate " + std::to_string(sample_rate));
  }
  if (log_floor <= 0.0) throw ValidationError("features: log_floor must be positive");
}

int FeatureParams::num_frames(std::size_t num_samples) const {
  if (num_samples == 0) throw ValidationError("features: empty audio");
  return 1 + static_cast<int>((num_samples - 1) / static_cast<std::size_t>(hop_length));
}

nlohmann::json FeatureParams::to_json() const {
  return nlohmann::json{{"sample_rate", sample_rate}, {"n_fft", n_fft},
                        {"hop_length", hop_length},   {"win_length", win_length},
                        {"n_mels", n_mels},           {"fmin", fmin},
                        {"fmax", fmax},               {"log_floor", log_floor}};
}

FeatureParams FeatureParams::from_json(const nlohmann::json& j) {
  FeatureParams p;
  p.sample_rate = j.at("sample_rate").get<int>();
  p.n_fft = j.at("n_fft").get<int>();
  p.hop_length = j.at("hop_length").get<int>();
  p.win_length = j.at("win_length").get<int>();
  p.n_mels = j.at("n_mels").get<int>();
  p.fmin = j.at("fmin").get<double>();
  p.fmax = j.at("fmax").get<double>();
  p.log_floor = j.at("log_floor").get<double>();
  p.validate();
  return p;
}

std::vector<double> mel_filterbank(const FeatureParams& params) {
  params.validate();
  const int bins = params.num_bins();
  const double mel_lo = hz_to_mel(params.fmin);
  const double mel_hi = hz_to_mel(params.fmax);
  std::vector<double> points(params.n_mels + 2);
  for (int i = 0; i < params.n_mels + 2; ++i) {
    points[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (params.n_mels + 1));
  }
  std::vector<double> fb(static_cast<std::size_t>(params.n_mels) * bins, 0.0);
  for (int m = 0; m < params.n_mels; ++m) {
    const double fl = points[m], fc = points[m + 1], fr = points[m + 2];
    for (int b = 0; b < bins; ++b) {
      const double f = static_cast<double>(b) * params.sample_rate / params.n_fft;
      double w = 0.0;
      if (f > fl && f < fr) {
        w = f <= fc ? (f - fl) / (fc - fl) : (fr - f) / (fr - fc);
      }
      fb[static_cast<std::size_t>(m) * bins + b] = w;
    }
  }
  return fb;
}

double mel_filter_center_hz(const FeatureParams& params, int m) {
  if (m < 0 || m >= params.n_mels) throw ValidationError("mel_filter_center_hz: bad index");
  const double mel_lo = hz_to_mel(params.fmin);
  const double mel_hi = hz_to_mel(params.fmax);
  return mel_to_hz(mel_lo + (mel_hi - mel_lo) * (m + 1) / (params.n_mels + 1));
}

namespace {

// Shared framing: returns [T, win] windowed frames of the reflect-padded signal.
std::vector<double> windowed_frames(const AudioClip& audio, const FeatureParams& params,
                                    int* frames_out) {
  params.validate();
  audio.validate("spectrogram input");
  if (audio.sample_rate != params.sample_rate) {
    throw ValidationError("spectrogram: audio at " + std::to_string(audio.sample_rate) +
                          " Hz but params expect " + std::to_string(params.sample_rate));
  }
  const std::int64_t len = static_cast<std::int64_t>(audio.samples.size());
  if (len < params.win_length) {
    throw ValidationError("spectrogram: audio too short (" + std::to_string(len) +
                          " < win_length " + std::to_string(params.win_length) + ")");
  }
  const int t_frames = params.num_frames(audio.samples.size());
  const int win = params.win_length;
  const int pad = win / 2;
  const std::vector<double> w = hann_window(win);
  std::vector<double> frames(static_cast<std::size_t>(t_frames) * win);
  for (int t = 0; t < t_frames; ++t) {
    for (int i = 0; i < win; ++i) {
      const std::int64_t p = static_cast<std::int64_t>(t) * params.hop_length + i - pad;
      frames[static_cast<std::size_t>(t) * win + i] =
          audio.samples[static_cast<std::size_t>(reflect_index(p, len))] * w[i];
    }
  }
  *frames_out = t_frames;
  return frames;
}

}  // namespace

std::vector<double> linear_spectrogram(const AudioClip& audio, const FeatureParams& params,
                                       int* frames_out) {
  int t_frames = 0;
  const std::vector<double> frames = windowed_frames(audio, params, &t_frames);
  const int bins = params.num_bins();
  const int win = params.win_length;
  std::vector<double> mag(static_cast<std::size_t>(t_frames) * bins);
  std::vector<double> frame(win);
  for (int t = 0; t < t_frames; ++t) {
    std::copy(frames.begin() + static_cast<std::size_t>(t) * win,
              frames.begin() + static_cast<std::size_t>(t + 1) * win, frame.begin());
    const auto spec = rfft(frame, static_cast<std::size_t>(params.n_fft));
    for (int b = 0; b < bins; ++b) {
      mag[static_cast<std::size_t>(t) * bins + b] = std::abs(spec[static_cast<std::size_t>(b)]);
    }
  }
  *frames_out = t_frames;
  return mag;
}

MelSpectrogram mel_spectrogram(const AudioClip& audio, const FeatureParams& params) {
  int t_frames = 0;
  const std::vector<double> mag = linear_spectrogram(audio, params, &t_frames);
  const int bins = params.num_bins();
  const std::vector<double> fb = mel_filterbank(params);

  MelSpectrogram mel;
  mel.frames = t_frames;
  mel.n_mels = params.n_mels;
  mel.params = params;
  mel.values.resize(static_cast<std::size_t>(t_frames) * params.n_mels);
  for (int t = 0; t < t_frames; ++t) {
    for (int m = 0; m < params.n_mels; ++m) {
      double acc = 0.0;
      const double* fbr = fb.data() + static_cast<std::size_t>(m) * bins;
      const double* mg = mag.data() + static_cast<std::size_t>(t) * bins;
      for (int b = 0; b < bins; ++b) acc += fbr[b] * mg[b];
      mel.values[static_cast<std::size_t>(t) * params.n_mels + m] =
          std::log(std::max(acc, params.log_floor));
    }
  }
  return mel;
}

std::vector<double> dct2_orthonormal(const std::vector<double>& x) {
  const int n = static_cast<int>(x.size());
  if (n == 0) throw ValidationError("dct2: empty input");
  std::vector<double> c(n, 0.0);
  for (int k = 0; k < n; ++k) {
    double acc = 0.0;
    for (int j = 0; j < n; ++j) {
      acc += x[j] * std::cos(kPi * k * (2 * j + 1) / (2.0 * n));
    }
    const double scale = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    c[k] = scale * acc;
  }
  return c;
}

std::vector<double> idct2_orthonormal(const std::vector<double>& c) {
  const int n = static_cast<int>(c.size());
  if (n == 0) throw ValidationError("idct2: empty input");
  std::vector<double> x(n, 0.0);
  for (int j = 0; j < n; ++j) {
    double acc = std::sqrt(1.0 / n) * c[0];
    for (int k = 1; k < n; ++k) {
      acc += std::sqrt(2.0 / n) * c[k] * std::cos(kPi * k * (2 * j + 1) / (2.0 * n));
    }
    x[j] = acc;
  }
  return x;
}

CepstralFrames mel_cepstra(const AudioClip& audio, const FeatureParams& params, int D) {
  if (D < 1 || D >= params.n_mels) {
    throw ValidationError("mel_cepstra: need 1 <= D < n_mels");
  }
  const MelSpectrogram mel = mel_spectrogram(audio, params);
  CepstralFrames out;
  out.frames = mel.frames;
  out.dim = D;
  out.values.resize(static_cast<std::size_t>(mel.frames) * D);
  std::vector<double> frame(params.n_mels);
  for (int t = 0; t < mel.frames; ++t) {
    for (int m = 0; m < params.n_mels; ++m) frame[m] = mel.at(t, m);
    const std::vector<double> c = dct2_orthonormal(frame);
    for (int d = 0; d < D; ++d) {
      out.values[static_cast<std::size_t>(t) * D + d] = c[d + 1];
    }
  }
  return out;
}

MelAnalyzer::MelAnalyzer(const FeatureParams& params) : params_(params) {
  params_.validate();
  const int win = params_.win_length;
  const int n_fft = params_.n_fft;
  const int bins = params_.num_bins();

  window_ = Tensor::from_values(hann_window(win), {win});

  std::vector<double> cosb(static_cast<std::size_t>(n_fft) * bins);
  std::vector<double> sinb(static_cast<std::size_t>(n_fft) * bins);
  for (int i = 0; i < n_fft; ++i) {
    for (int k = 0; k < bins; ++k) {
      const double a = 2.0 * kPi * i * k / n_fft;
      cosb[static_cast<std::size_t>(i) * bins + k] = std::cos(a);
      sinb[static_cast<std::size_t>(i) * bins + k] = -std::sin(a);
    }
  }
  cos_basis_ = Tensor::from_values(std::move(cosb), {n_fft, bins});
  sin_basis_ = Tensor::from_values(std::move(sinb), {n_fft, bins});

  const std::vector<double> fb = mel_filterbank(params_);
  std::vector<double> fbt(static_cast<std::size_t>(bins) * params_.n_mels);
  for (int m = 0; m < params_.n_mels; ++m)
    for (int b = 0; b < bins; ++b)
      fbt[static_cast<std::size_t>(b) * params_.n_mels + m] =
          fb[static_cast<std::size_t>(m) * bins + b];
  mel_fb_t_ = Tensor::from_values(std::move(fbt), {bins, params_.n_mels});
}

Tensor MelAnalyzer::log_mel(const Tensor& wav) const {
  if (wav.shape().size() != 1) throw RuntimeFault("MelAnalyzer: expected 1-D waveform");
  const std::int64_t len = static_cast<std::int64_t>(wav.numel());
  if (len < params_.win_length) {
    throw ValidationError("MelAnalyzer: waveform too short (" + std::to_string(len) + ")");
  }
  const int t_frames = params_.num_frames(static_cast<std::size_t>(len));
  const int win = params_.win_length;
  const int pad = win / 2;

  std::vector<std::int64_t> idx(static_cast<std::size_t>(t_frames) * win);
  for (int t = 0; t < t_frames; ++t) {
    for (int i = 0; i < win; ++i) {
      idx[static_cast<std::size_t>(t) * win + i] =
          reflect_index(static_cast<std::int64_t>(t) * params_.hop_length + i - pad, len);
    }
  }

  Tensor frames = reshape(gather_flat(wav, idx), {t_frames, win});
  frames = mul_rowwise(frames, window_);
  if (win < params_.n_fft) {
    Tensor zeros = Tensor::zeros({t_frames, params_.n_fft - win});
    frames = concat_cols(frames, zeros);
  }
  Tensor re = matmul(frames, cos_basis_);
  Tensor im = matmul(frames, sin_basis_);
  Tensor mag = magnitude(re, im);
  Tensor mel = matmul(mag, mel_fb_t_);
  return log_clamp(mel, params_.log_floor);
}

}  // namespace scenetts
