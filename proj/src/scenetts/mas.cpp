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

#include "scenetts/mas.hpp"

#include <cmath>
#include <limits>

#include "scenetts/errors.hpp"

namespace scenetts {

bool AlignmentPath::valid() const {
  if (frames <= 0 || phonemes <= 0) return false;
  if (static_cast<int>(frame_to_phoneme.size()) != frames) return false;
  if (static_cast<int>(durations.size()) != phonemes) return false;
  int prev = 0;
  for (int t = 0; t < frames; ++t) {
    const int s = frame_to_phoneme[t];
    if (s < 0 || s >= phonemes) return false;
    if (t == 0 && s != 0) return false;
    if (t > 0 && (s < prev || s > prev + 1)) return false;
    prev = s;
  }
  if (prev != phonemes - 1) return false;
  int total = 0;
  for (int s = 0; s < phonemes; ++s) {
    if (durations[s] < 1) return false;
    total += durations[s];
  }
  return total == frames;
}

AlignmentPath monotonic_alignment_search(const std::vector<double>& log_like, int t_frames,
                                         int s_phonemes) {
  if (s_phonemes < 1) throw ValidationError("MAS: need at least one phoneme");
  if (t_frames < s_phonemes) {
    throw ValidationError("MAS: need T >= S to cover all phonemes (T=" +
                          std::to_string(t_frames) + ", S=" + std::to_string(s_phonemes) + ")");
  }
  if (log_like.size() != static_cast<std::size_t>(t_frames) * s_phonemes) {
    throw ValidationError("MAS: log-likelihood matrix size mismatch");
  }
  for (double v : log_like) {
    if (!std::isfinite(v)) throw ValidationError("MAS: non-finite log-likelihood");
  }

  const double neg_inf = -std::numeric_limits<double>::infinity();
  std::vector<double> q(static_cast<std::size_t>(t_frames) * s_phonemes, neg_inf);
  // choice[t][s]: true when the best predecessor advances from phoneme s-1.
  std::vector<char> advance(static_cast<std::size_t>(t_frames) * s_phonemes, 0);

  q[0] = log_like[0];
  for (int t = 1; t < t_frames; ++t) {
    // Feasibility: s <= t and enough frames remain for the trailing phonemes.
    const int s_lo = std::max(0, s_phonemes - (t_frames - t));
    const int s_hi = std::min(t, s_phonemes - 1);
    for (int s = s_lo; s <= s_hi; ++s) {
      const double stay = q[static_cast<std::size_t>(t - 1) * s_phonemes + s];
      const double from_prev =
          s > 0 ? q[static_cast<std::size_t>(t - 1) * s_phonemes + s - 1] : neg_inf;
      // Tie toward staying on the current phoneme.
      double best = stay;
      bool adv = false;
      if (from_prev > stay) {
        best = from_prev;
        adv = true;
      }
      if (best == neg_inf) continue;
      q[static_cast<std::size_t>(t) * s_phonemes + s] =
          best + log_like[static_cast<std::size_t>(t) * s_phonemes + s];
      advance[static_cast<std::size_t>(t) * s_phonemes + s] = adv ? 1 : 0;
    }
  }

  AlignmentPath path;
  path.frames = t_frames;
  path.phonemes = s_phonemes;
  path.frame_to_phoneme.resize(t_frames);
  path.durations.assign(s_phonemes, 0);

  int s = s_phonemes - 1;
  for (int t = t_frames - 1; t >= 0; --t) {
    path.frame_to_phoneme[t] = s;
    path.durations[s] += 1;
    if (t > 0 && advance[static_cast<std::size_t>(t) * s_phonemes + s]) s -= 1;
  }

  if (!path.valid()) throw RuntimeFault("MAS: produced an invalid path");
  return path;
}

}  // namespace scenetts
