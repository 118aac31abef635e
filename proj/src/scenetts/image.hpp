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

namespace scenetts {

/// H x W x 3 image, row-major, channel-interleaved, values in [0, 1].
struct SceneImage {
  int height = 0;
  int width = 0;
  std::vector<double> pixels;  // size height * width * 3
  std::string source_path;

  double at(int y, int x, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  double& at(int y, int x, int c) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }

  void validate(const std::string& what) const;
};

SceneImage read_png(const std::string& path);
void write_png(const std::string& path, const SceneImage& image);

/// Bilinear resize to out_h x out_w.
SceneImage resize_bilinear(const SceneImage& in, int out_h, int out_w);

/// Bilinear upsample of a single-channel map (row-major h x w).
std::vector<double> upsample_bilinear(const std::vector<double>& map, int h, int w,
                                      int out_h, int out_w);

/// Blends a [0,1] heatmap (blue->red colormap) over an image, alpha 0.5.
/// Heatmap must already be at image resolution.
SceneImage overlay_heatmap(const SceneImage& image, const std::vector<double>& heat);

}  // namespace scenetts
