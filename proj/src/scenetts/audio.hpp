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

#include <cstdint>
#include <string>
#include <vector>

namespace scenetts {

/// Mono waveform plus sample rate. The unit of speech I/O everywhere.
struct AudioClip {
  std::vector<double> samples;
  int sample_rate = 0;

  std::size_t size() const { return samples.size(); }
  double duration_seconds() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate
                           : 0.0;
  }

  /// Throws ValidationError if any sample is non-finite or sample_rate <= 0.
  void validate(const std::string& what) const;
};

enum class WavEncoding { pcm16, float32 };

/// Reads a mono WAV file (16-bit PCM or 32-bit float). Multi-channel files
/// are rejected with an explicit error.
AudioClip read_wav(const std::string& path);

/// Writes a mono WAV file. Samples outside [-1, 1] are clipped for pcm16.
void write_wav(const std::string& path, const AudioClip& clip,
               WavEncoding encoding = WavEncoding::float32);

/// Polyphase-style windowed-sinc resampler (rational ratio). Used at corpus
/// ingest to bring all audio to the configured target rate.
AudioClip resample(const AudioClip& in, int target_rate);

}  // namespace scenetts
