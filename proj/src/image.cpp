// Copyright 2026 The gs4d Authors
// SPDX-License-Identifier: Apache-2.0

#include "gs4d/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>

#include "gs4d/error.hpp"

namespace gs4d {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct DecodedPng {
  int width = 0;
  int height = 0;
  int channels = 0;  // 1, 2, 3 or 4 after transforms
  std::vector<double> values;
};

DecodedPng decode_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open " + path.string());

  unsigned char sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw FormatError("not a PNG file: " + path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng init failed");
  }
  DecodedPng out;
  std::vector<unsigned char> raw;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("corrupt PNG: " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const int color_type = png_get_color_type(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (bit_depth == 16) png_set_swap(png);  // little-endian 16-bit samples
  png_read_update_info(png, info);

  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.channels = png_get_channels(png, info);
  const int depth = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  raw.resize(rowbytes * out.height);
  rows.resize(out.height);
  for (int y = 0; y < out.height; ++y) rows[y] = raw.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const std::size_t n = static_cast<std::size_t>(out.width) * out.height * out.channels;
  out.values.resize(n);
  if (depth == 16) {
    for (std::size_t i = 0; i < n; ++i) {
      const unsigned v = raw[2 * i] | (raw[2 * i + 1] << 8);
      out.values[i] = v / 65535.0;
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) out.values[i] = raw[i] / 255.0;
  }
  return out;
}

}  // namespace

Image read_png(const std::filesystem::path& path, Image* alpha) {
  const DecodedPng d = decode_png(path);
  Image img(d.width, d.height, 3);
  if (alpha) *alpha = Image(d.width, d.height, 1, 1.0);
  const bool has_alpha = d.channels == 2 || d.channels == 4;
  const bool gray = d.channels <= 2;
  for (std::size_t p = 0; p < img.pixel_count(); ++p) {
    const double* src = &d.values[p * d.channels];
    const double a = has_alpha ? src[d.channels - 1] : 1.0;
    for (int c = 0; c < 3; ++c) {
      const double v = gray ? src[0] : src[c];
      img.data[p * 3 + c] = a * v + (1.0 - a);  // over white
    }
    if (alpha) alpha->data[p] = a;
  }
  return img;
}

Image read_png_mask(const std::filesystem::path& path) {
  const DecodedPng d = decode_png(path);
  Image mask(d.width, d.height, 1);
  for (std::size_t p = 0; p < mask.pixel_count(); ++p) {
    const double* src = &d.values[p * d.channels];
    if (d.channels == 2 || d.channels == 4) {
      mask.data[p] = src[d.channels - 1];
    } else if (d.channels == 1) {
      mask.data[p] = src[0];
    } else {
      mask.data[p] = (src[0] + src[1] + src[2]) / 3.0;
    }
  }
  return mask;
}

unsigned char quantize_u8(double v) {
  const double c = std::clamp(v, 0.0, 1.0);
  return static_cast<unsigned char>(std::floor(c * 255.0 + 0.5));
}

void write_png(const std::filesystem::path& path, const Image& img) {
  if (img.channels != 1 && img.channels != 3)
    throw ParameterError("write_png supports 1 or 3 channels");
  if (img.width < 1 || img.height < 1) throw ParameterError("write_png: empty image");
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("cannot write " + path.string());

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng init failed");
  }
  std::vector<unsigned char> bytes(img.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = quantize_u8(img.data[i]);
  std::vector<png_bytep> rows(img.height);
  for (int y = 0; y < img.height; ++y)
    rows[y] = bytes.data() + static_cast<std::size_t>(y) * img.width * img.channels;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed writing " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, img.width, img.height, 8,
               img.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image resize_bilinear(const Image& img, int width, int height) {
  if (width < 1 || height < 1) throw ParameterError("resize_bilinear: bad target size");
  if (width == img.width && height == img.height) return img;
  Image out(width, height, img.channels);
  const double sx = static_cast<double>(img.width) / width;
  const double sy = static_cast<double>(img.height) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, img.height - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, img.width - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < img.channels; ++c) {
        const double top = (1 - wx) * img.at(x0, y0, c) + wx * img.at(x1, y0, c);
        const double bot = (1 - wx) * img.at(x0, y1, c) + wx * img.at(x1, y1, c);
        out.at(x, y, c) = (1 - wy) * top + wy * bot;
      }
    }
  }
  return out;
}

}  // namespace gs4d
