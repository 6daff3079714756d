// Copyright 2026 The gs4d Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace gs4d {

/// Row-major, channel-interleaved float image. Values are nominally in [0, 1].
struct Image {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<double> data;

  Image() = default;
  Image(int w, int h, int c = 3, double fill = 0.0)
      : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {}

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  std::size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }
  bool same_shape(const Image& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }

  double& at(int x, int y, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  double at(int x, int y, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  friend bool operator==(const Image&, const Image&) = default;
};

/// Reads an 8-bit (or 16-bit) PNG. Gray is expanded to RGB; RGBA is composited
/// over white. When `alpha` is non-null it receives the alpha channel (1 when the
/// file has none).
Image read_png(const std::filesystem::path& path, Image* alpha = nullptr);

/// Reads a PNG as a single-channel [0,1] mask (luminance of RGB, or alpha if present).
Image read_png_mask(const std::filesystem::path& path);

/// Writes an 8-bit PNG (1 or 3 channels), clamping to [0,1] and rounding half up.
void write_png(const std::filesystem::path& path, const Image& img);

/// 8-bit quantization used by write_png.
unsigned char quantize_u8(double v);

/// Bilinear resample (pixel-centre aligned).
Image resize_bilinear(const Image& img, int width, int height);

}  // namespace gs4d
