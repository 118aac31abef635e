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

#include <vector>

namespace scenetts {

/// Monotonic, surjective, contiguous frame-to-phoneme alignment. Every frame
/// maps to exactly one phoneme, phoneme spans are contiguous, the mapping is
/// non-decreasing, and every phoneme receives at least one frame.
struct AlignmentPath {
  int frames = 0;
  int phonemes = 0;
  std::vector<int> frame_to_phoneme;  // size frames
  std::vector<int> durations;         // size phonemes, all >= 1

  bool valid() const;
};

/// Maximum-likelihood alignment by dynamic programming over a [T, S]
/// log-likelihood matrix (row-major). Requires T >= S >= 1. Ties break toward
/// staying on the current phoneme.
AlignmentPath monotonic_alignment_search(const std::vector<double>& log_like, int t_frames,
                                         int s_phonemes);

}  // namespace scenetts
