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

#include <complex>
#include <string>
#include <vector>

#include "scenetts/audio.hpp"

namespace scenetts {

enum class EnvLabel { wide, narrow_env, unknown };

/// Room impulse response. rt60 is filled by estimate_rt60 at ingest.
struct RoomImpulseResponse {
  std::vector<double> samples;
  int sample_rate = 0;
  double rt60 = 0.0;
  EnvLabel env_label = EnvLabel::unknown;
};

/// Full linear convolution (length n + m - 1), FFT-based.
std::vector<double> fft_convolve_full(const std::vector<double>& a,
                                      const std::vector<double>& b);

/// Forward real FFT of a real signal zero-padded to n; returns n/2 + 1
/// complex bins.
std::vector<std::complex<double>> rfft(const std::vector<double>& x, std::size_t n);

/// Convolves clean speech with an RIR: aligns the RIR's maximum-magnitude tap
/// to time zero, truncates to the clean length. No normalization.
AudioClip convolve_rir_raw(const AudioClip& clean, const RoomImpulseResponse& rir);

/// convolve_rir_raw followed by peak normalization to 0.95. Near-silent raw
/// output (peak < 1e-8) is returned as-is to avoid dividing by ~0.
AudioClip convolve_rir(const AudioClip& clean, const RoomImpulseResponse& rir);

/// Schroeder backward-integrated energy decay curve in dB, normalized so the
/// first sample is 0 dB. Empty tail entries map to -inf dB.
std::vector<double> schroeder_edc_db(const std::vector<double>& rir);

enum class Rt60Method { t30, t20, none };

struct Rt60Estimate {
  double seconds = 0.0;
  Rt60Method method = Rt60Method::none;
  bool warning = false;  // set when no usable decay range was found
};

/// RT60 from a line fit to the EDC between -5 and -35 dB (T30). Falls back to
/// a -5..-25 dB fit (T20); if even -25 dB is never reached, returns 0 with the
/// warning flag set.
Rt60Estimate estimate_rt60_detail(const std::vector<double>& rir, int sample_rate);

double estimate_rt60(const RoomImpulseResponse& rir);

}  // namespace scenetts
