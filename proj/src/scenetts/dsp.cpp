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

#include "scenetts/dsp.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

#include "scenetts/errors.hpp"

namespace scenetts {

namespace {

// FFTW planning is not thread-safe; execution of independent plans is.
std::mutex g_fftw_plan_mutex;

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

struct FftwBuf {
  double* re = nullptr;
  fftw_complex* cx = nullptr;
  std::size_t n = 0;
  explicit FftwBuf(std::size_t n_) : n(n_) {
    re = fftw_alloc_real(n);
    cx = fftw_alloc_complex(n / 2 + 1);
    if (!re || !cx) throw RuntimeFault("fftw allocation failed");
  }
  ~FftwBuf() {
    fftw_free(re);
    fftw_free(cx);
  }
  FftwBuf(const FftwBuf&) = delete;
  FftwBuf& operator=(const FftwBuf&) = delete;
};

}  // namespace

std::vector<std::complex<double>> rfft(const std::vector<double>& x, std::size_t n) {
  if (n < x.size() || n == 0) {
    throw ValidationError("rfft: n must be >= len(x) and > 0");
  }
  FftwBuf buf(n);
  std::copy(x.begin(), x.end(), buf.re);
  std::fill(buf.re + x.size(), buf.re + n, 0.0);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(g_fftw_plan_mutex);
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), buf.re, buf.cx, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(g_fftw_plan_mutex);
    fftw_destroy_plan(plan);
  }
  std::vector<std::complex<double>> out(n / 2 + 1);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = {buf.cx[i][0], buf.cx[i][1]};
  }
  return out;
}

std::vector<double> fft_convolve_full(const std::vector<double>& a,
                                      const std::vector<double>& b) {
  if (a.empty() || b.empty()) {
    throw ValidationError("fft_convolve_full: empty input");
  }
  const std::size_t full = a.size() + b.size() - 1;
  const std::size_t n = next_pow2(full);

  FftwBuf fa(n), fb(n);
  std::copy(a.begin(), a.end(), fa.re);
  std::fill(fa.re + a.size(), fa.re + n, 0.0);
  std::copy(b.begin(), b.end(), fb.re);
  std::fill(fb.re + b.size(), fb.re + n, 0.0);

  fftw_plan pa, pb, pinv;
  {
    std::lock_guard<std::mutex> lock(g_fftw_plan_mutex);
    pa = fftw_plan_dft_r2c_1d(static_cast<int>(n), fa.re, fa.cx, FFTW_ESTIMATE);
    pb = fftw_plan_dft_r2c_1d(static_cast<int>(n), fb.re, fb.cx, FFTW_ESTIMATE);
    pinv = fftw_plan_dft_c2r_1d(static_cast<int>(n), fa.cx, fa.re, FFTW_ESTIMATE);
  }
  fftw_execute(pa);
  fftw_execute(pb);
  const std::size_t bins = n / 2 + 1;
  for (std::size_t i = 0; i < bins; ++i) {
    const double re = fa.cx[i][0] * fb.cx[i][0] - fa.cx[i][1] * fb.cx[i][1];
    const double im = fa.cx[i][0] * fb.cx[i][1] + fa.cx[i][1] * fb.cx[i][0];
    fa.cx[i][0] = re;
    fa.cx[i][1] = im;
  }
  fftw_execute(pinv);
  {
    std::lock_guard<std::mutex> lock(g_fftw_plan_mutex);
    fftw_destroy_plan(pa);
    fftw_destroy_plan(pb);
    fftw_destroy_plan(pinv);
  }

  std::vector<double> out(full);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < full; ++i) out[i] = fa.re[i] * scale;
  return out;
}

AudioClip convolve_rir_raw(const AudioClip& clean, const RoomImpulseResponse& rir) {
  clean.validate("convolve_rir clean input");
  if (rir.samples.empty()) throw ValidationError("convolve_rir: empty RIR");
  if (clean.samples.empty()) throw ValidationError("convolve_rir: empty clean signal");
  if (rir.sample_rate != clean.sample_rate) {
    throw ValidationError("convolve_rir: sample-rate mismatch (clean " +
                          std::to_string(clean.sample_rate) + " Hz, rir " +
                          std::to_string(rir.sample_rate) + " Hz)");
  }
  for (double s : rir.samples) {
    if (!std::isfinite(s)) throw ValidationError("convolve_rir: non-finite RIR sample");
  }

  const std::vector<double> full = fft_convolve_full(clean.samples, rir.samples);

  // Direct path = maximum-magnitude RIR tap; align it to time zero.
  std::size_t peak = 0;
  double peak_mag = -1.0;
  for (std::size_t i = 0; i < rir.samples.size(); ++i) {
    const double m = std::abs(rir.samples[i]);
    if (m > peak_mag) {
      peak_mag = m;
      peak = i;
    }
  }

  AudioClip out;
  out.sample_rate = clean.sample_rate;
  out.samples.resize(clean.samples.size(), 0.0);
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    const std::size_t j = i + peak;
    if (j < full.size()) out.samples[i] = full[j];
  }
  return out;
}

AudioClip convolve_rir(const AudioClip& clean, const RoomImpulseResponse& rir) {
  AudioClip out = convolve_rir_raw(clean, rir);
  double peak = 0.0;
  for (double s : out.samples) peak = std::max(peak, std::abs(s));
  if (peak >= 1e-8) {
    const double g = 0.95 / peak;
    for (double& s : out.samples) s *= g;
  }
  return out;
}

std::vector<double> schroeder_edc_db(const std::vector<double>& rir) {
  if (rir.empty()) throw ValidationError("schroeder_edc_db: empty RIR");
  std::vector<double> edc(rir.size());
  double acc = 0.0;
  for (std::size_t i = rir.size(); i-- > 0;) {
    acc += rir[i] * rir[i];
    edc[i] = acc;
  }
  const double total = edc[0];
  const double neg_inf = -std::numeric_limits<double>::infinity();
  if (total <= 0.0) return std::vector<double>(rir.size(), neg_inf);
  for (double& v : edc) {
    v = v > 0.0 ? 10.0 * std::log10(v / total) : neg_inf;
  }
  return edc;
}

namespace {

// Least-squares slope (dB per second) of the EDC over [i_lo, i_hi].
bool fit_slope(const std::vector<double>& edc_db, std::size_t i_lo, std::size_t i_hi,
               int sample_rate, double* slope_out) {
  if (i_hi <= i_lo + 1) return false;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  double n = 0.0;
  for (std::size_t i = i_lo; i <= i_hi; ++i) {
    if (!std::isfinite(edc_db[i])) continue;
    const double x = static_cast<double>(i) / sample_rate;
    const double y = edc_db[i];
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    n += 1.0;
  }
  if (n < 2.0) return false;
  const double denom = n * sxx - sx * sx;
  if (denom <= 0.0) return false;
  *slope_out = (n * sxy - sx * sy) / denom;
  return true;
}

// First index where the EDC falls to or below `level` dB.
bool find_level(const std::vector<double>& edc_db, double level, std::size_t* idx) {
  for (std::size_t i = 0; i < edc_db.size(); ++i) {
    if (edc_db[i] <= level) {
      *idx = i;
      return true;
    }
  }
  return false;
}

}  // namespace

Rt60Estimate estimate_rt60_detail(const std::vector<double>& rir, int sample_rate) {
  if (rir.empty()) throw ValidationError("estimate_rt60: empty RIR");
  if (sample_rate <= 0) throw ValidationError("estimate_rt60: bad sample rate");
  for (double s : rir) {
    if (!std::isfinite(s)) throw ValidationError("estimate_rt60: non-finite RIR sample");
  }

  const std::vector<double> edc = schroeder_edc_db(rir);
  Rt60Estimate est;

  std::size_t i5 = 0;
  if (!find_level(edc, -5.0, &i5)) {
    est.warning = true;
    return est;
  }

  const auto try_fit = [&](double floor_db, Rt60Method method) -> bool {
    std::size_t i_floor = 0;
    if (!find_level(edc, floor_db, &i_floor)) return false;
    double slope = 0.0;
    if (!fit_slope(edc, i5, i_floor, sample_rate, &slope)) return false;
    if (slope >= 0.0) return false;
    est.seconds = -60.0 / slope;
    est.method = method;
    return true;
  };

  if (try_fit(-35.0, Rt60Method::t30)) return est;
  if (try_fit(-25.0, Rt60Method::t20)) return est;

  est.warning = true;
  return est;
}

double estimate_rt60(const RoomImpulseResponse& rir) {
  return estimate_rt60_detail(rir.samples, rir.sample_rate).seconds;
}

}  // namespace scenetts
