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

#include "scenetts/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "scenetts/errors.hpp"

namespace scenetts {

namespace {

void put_u32(std::vector<std::uint8_t>& buf, std::uint32_t v) {
  buf.push_back(static_cast<std::uint8_t>(v & 0xff));
  buf.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
  buf.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
  buf.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

void put_u16(std::vector<std::uint8_t>& buf, std::uint16_t v) {
  buf.push_back(static_cast<std::uint8_t>(v & 0xff));
  buf.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t get_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace

void AudioClip::validate(const std::string& what) const {
  if (sample_rate <= 0) {
    throw ValidationError(what + ": sample_rate must be positive, got " +
                          std::to_string(sample_rate));
  }
  for (double s : samples) {
    if (!std::isfinite(s)) {
      throw ValidationError(what + ": non-finite sample");
    }
  }
}

AudioClip read_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot open WAV file: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw ValidationError("not a RIFF/WAVE file: " + path);
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const std::uint8_t* data = nullptr;
  std::uint32_t data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t chunk_len = get_u32(bytes.data() + pos + 4);
    const std::uint8_t* chunk = bytes.data() + pos + 8;
    if (pos + 8 + chunk_len > bytes.size()) break;
    if (std::memcmp(bytes.data() + pos, "fmt ", 4) == 0 && chunk_len >= 16) {
      format = get_u16(chunk);
      channels = get_u16(chunk + 2);
      rate = get_u32(chunk + 4);
      bits = get_u16(chunk + 14);
    } else if (std::memcmp(bytes.data() + pos, "data", 4) == 0) {
      data = chunk;
      data_len = chunk_len;
    }
    pos += 8 + chunk_len + (chunk_len & 1);
  }

  if (data == nullptr || rate == 0) {
    throw ValidationError("WAV file missing fmt/data chunk: " + path);
  }
  if (channels != 1) {
    throw ValidationError("expected mono WAV, got " + std::to_string(channels) +
                          " channels: " + path);
  }

  AudioClip clip;
  clip.sample_rate = static_cast<int>(rate);
  if (format == 1 && bits == 16) {
    const std::size_t n = data_len / 2;
    clip.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::int16_t v =
          static_cast<std::int16_t>(data[2 * i] | (data[2 * i + 1] << 8));
      clip.samples[i] = static_cast<double>(v) / 32768.0;
    }
  } else if (format == 3 && bits == 32) {
    const std::size_t n = data_len / 4;
    clip.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t u = get_u32(data + 4 * i);
      float v;
      std::memcpy(&v, &u, 4);
      clip.samples[i] = static_cast<double>(v);
    }
  } else {
    throw ValidationError("unsupported WAV encoding (want pcm16 or float32): " + path);
  }
  clip.validate(path);
  return clip;
}

void write_wav(const std::string& path, const AudioClip& clip, WavEncoding encoding) {
  clip.validate(path);
  std::vector<std::uint8_t> buf;
  const std::uint32_t n = static_cast<std::uint32_t>(clip.samples.size());
  const bool f32 = encoding == WavEncoding::float32;
  const std::uint32_t bytes_per = f32 ? 4 : 2;
  const std::uint32_t data_len = n * bytes_per;

  buf.reserve(44 + data_len);
  buf.insert(buf.end(), {'R', 'I', 'F', 'F'});
  put_u32(buf, 36 + data_len);
  buf.insert(buf.end(), {'W', 'A', 'V', 'E'});
  buf.insert(buf.end(), {'f', 'm', 't', ' '});
  put_u32(buf, 16);
  put_u16(buf, f32 ? 3 : 1);
  put_u16(buf, 1);
  put_u32(buf, static_cast<std::uint32_t>(clip.sample_rate));
  put_u32(buf, static_cast<std::uint32_t>(clip.sample_rate) * bytes_per);
  put_u16(buf, static_cast<std::uint16_t>(bytes_per));
  put_u16(buf, static_cast<std::uint16_t>(8 * bytes_per));
  buf.insert(buf.end(), {'d', 'a', 't', 'a'});
  put_u32(buf, data_len);

  if (f32) {
    for (double s : clip.samples) {
      const float v = static_cast<float>(s);
      std::uint32_t u;
      std::memcpy(&u, &v, 4);
      put_u32(buf, u);
    }
  } else {
    for (double s : clip.samples) {
      const double c = std::clamp(s, -1.0, 1.0);
      const auto v = static_cast<std::int16_t>(std::lrint(c * 32767.0));
      put_u16(buf, static_cast<std::uint16_t>(v));
    }
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw RuntimeFault("cannot write WAV file: " + path);
  f.write(reinterpret_cast<const char*>(buf.data()),
          static_cast<std::streamsize>(buf.size()));
}

AudioClip resample(const AudioClip& in, int target_rate) {
  in.validate("resample input");
  if (target_rate <= 0) throw ValidationError("resample: target rate must be positive");
  if (in.sample_rate == target_rate) return in;

  const int g = static_cast<int>(std::gcd(in.sample_rate, target_rate));
  const int up = target_rate / g;
  const int down = in.sample_rate / g;

  // Windowed-sinc lowpass at min(pi/up, pi/down) in the upsampled domain.
  const int zero_crossings = 16;
  const double cutoff = 0.95 / std::max(up, down);
  const int half = zero_crossings * std::max(up, down);

  const auto kernel = [&](int t) {
    if (t == 0) return cutoff;
    const double x = 3.14159265358979323846 * t;
    // Hann-windowed sinc
    const double w = 0.5 * (1.0 + std::cos(x / half));
    return w * std::sin(cutoff * x) / x;
  };

  const std::size_t out_len =
      static_cast<std::size_t>(static_cast<std::uint64_t>(in.samples.size()) * up / down);
  AudioClip out;
  out.sample_rate = target_rate;
  out.samples.resize(out_len, 0.0);

  for (std::size_t i = 0; i < out_len; ++i) {
    // Position on the up-rate grid, then gather input taps.
    const std::int64_t t_up = static_cast<std::int64_t>(i) * down;
    double acc = 0.0;
    const std::int64_t j_lo = (t_up - half + up - 1) / up;     // ceil
    const std::int64_t j_hi = (t_up + half) / up;              // floor
    for (std::int64_t j = std::max<std::int64_t>(0, j_lo);
         j <= std::min<std::int64_t>(static_cast<std::int64_t>(in.samples.size()) - 1, j_hi);
         ++j) {
      acc += in.samples[static_cast<std::size_t>(j)] *
             kernel(static_cast<int>(t_up - j * up));
    }
    out.samples[i] = acc * up;
  }
  return out;
}

}  // namespace scenetts
