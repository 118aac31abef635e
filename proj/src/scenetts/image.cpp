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

#include "scenetts/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "scenetts/errors.hpp"

namespace scenetts {

void SceneImage::validate(const std::string& what) const {
  if (height < 1 || width < 1) {
    throw ValidationError(what + ": image must be at least 1x1");
  }
  if (pixels.size() != static_cast<std::size_t>(height) * width * 3) {
    throw ValidationError(what + ": pixel buffer size mismatch");
  }
  for (double p : pixels) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ValidationError(what + ": pixel value outside [0,1]");
    }
  }
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};

}  // namespace

SceneImage read_png(const std::string& path) {
  std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw ValidationError("cannot open PNG file: " + path);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw RuntimeFault("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw RuntimeFault("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ValidationError("failed to decode PNG: " + path);
  }

  png_init_io(png, fp.get());
  png_read_info(png, info);

  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const int color_type = png_get_color_type(png, info);
  const int bit_depth = png_get_bit_depth(png, info);

  // Normalize everything to 8-bit RGB.
  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_set_gray_to_rgb(png);
  }
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  std::vector<png_byte> row(png_get_rowbytes(png, info));
  SceneImage img;
  img.height = static_cast<int>(h);
  img.width = static_cast<int>(w);
  img.source_path = path;
  img.pixels.resize(static_cast<std::size_t>(h) * w * 3);

  for (png_uint_32 y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (png_uint_32 x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        img.pixels[(static_cast<std::size_t>(y) * w + x) * 3 + c] =
            static_cast<double>(row[x * 3 + c]) / 255.0;
      }
    }
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void write_png(const std::string& path, const SceneImage& image) {
  image.validate(path);
  std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw RuntimeFault("cannot write PNG file: " + path);

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw RuntimeFault("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw RuntimeFault("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw RuntimeFault("failed to encode PNG: " + path);
  }

  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width),
               static_cast<png_uint_32>(image.height), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<png_byte> row(static_cast<std::size_t>(image.width) * 3);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double v = std::clamp(image.at(y, x, c), 0.0, 1.0);
        row[static_cast<std::size_t>(x) * 3 + c] =
            static_cast<png_byte>(std::lrint(v * 255.0));
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

std::vector<double> upsample_bilinear(const std::vector<double>& map, int h, int w,
                                      int out_h, int out_w) {
  if (h < 1 || w < 1 || out_h < 1 || out_w < 1) {
    throw ValidationError("upsample_bilinear: bad dimensions");
  }
  std::vector<double> out(static_cast<std::size_t>(out_h) * out_w);
  for (int y = 0; y < out_h; ++y) {
    // align-corners mapping; degenerate axes collapse to index 0
    const double fy = out_h > 1 ? static_cast<double>(y) * (h - 1) / (out_h - 1) : 0.0;
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, h - 1);
    const double wy = fy - y0;
    for (int x = 0; x < out_w; ++x) {
      const double fx = out_w > 1 ? static_cast<double>(x) * (w - 1) / (out_w - 1) : 0.0;
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, w - 1);
      const double wx = fx - x0;
      const double v00 = map[static_cast<std::size_t>(y0) * w + x0];
      const double v01 = map[static_cast<std::size_t>(y0) * w + x1];
      const double v10 = map[static_cast<std::size_t>(y1) * w + x0];
      const double v11 = map[static_cast<std::size_t>(y1) * w + x1];
      out[static_cast<std::size_t>(y) * out_w + x] =
          (1 - wy) * ((1 - wx) * v00 + wx * v01) + wy * ((1 - wx) * v10 + wx * v11);
    }
  }
  return out;
}

SceneImage resize_bilinear(const SceneImage& in, int out_h, int out_w) {
  in.validate("resize_bilinear input");
  SceneImage out;
  out.height = out_h;
  out.width = out_w;
  out.source_path = in.source_path;
  out.pixels.resize(static_cast<std::size_t>(out_h) * out_w * 3);
  for (int c = 0; c < 3; ++c) {
    std::vector<double> chan(static_cast<std::size_t>(in.height) * in.width);
    for (int y = 0; y < in.height; ++y)
      for (int x = 0; x < in.width; ++x) chan[static_cast<std::size_t>(y) * in.width + x] = in.at(y, x, c);
    const std::vector<double> up = upsample_bilinear(chan, in.height, in.width, out_h, out_w);
    for (int y = 0; y < out_h; ++y)
      for (int x = 0; x < out_w; ++x) out.at(y, x, c) = up[static_cast<std::size_t>(y) * out_w + x];
  }
  return out;
}

SceneImage overlay_heatmap(const SceneImage& image, const std::vector<double>& heat) {
  if (heat.size() != static_cast<std::size_t>(image.height) * image.width) {
    throw ValidationError("overlay_heatmap: heatmap resolution mismatch");
  }
  SceneImage out = image;
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const double v = std::clamp(heat[static_cast<std::size_t>(y) * image.width + x], 0.0, 1.0);
      // blue (cold) -> green -> red (hot)
      const double r = std::clamp(2.0 * v - 0.5, 0.0, 1.0);
      const double g = 1.0 - std::abs(2.0 * v - 1.0);
      const double b = std::clamp(1.5 - 2.0 * v, 0.0, 1.0);
      out.at(y, x, 0) = 0.5 * image.at(y, x, 0) + 0.5 * r;
      out.at(y, x, 1) = 0.5 * image.at(y, x, 1) + 0.5 * g;
      out.at(y, x, 2) = 0.5 * image.at(y, x, 2) + 0.5 * b;
    }
  }
  return out;
}

}  // namespace scenetts
