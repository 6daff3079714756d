// Copyright 2026 The gs4d Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gs4d/camera.hpp"
#include "gs4d/image.hpp"
#include "gs4d/scene.hpp"

namespace gs4d {

inline constexpr int kTileSize = 16;
/// A pixel stops compositing once its transmittance drops below this.
inline constexpr double kTransmittanceEpsilon = 1e-4;
/// Contributions with alpha * G below this are skipped.
inline constexpr double kMinContribution = 1.0 / 255.0;
/// Splats only reach pixels inside their 3-sigma ellipse.
inline constexpr double kExtentSigmas = 3.0;

struct Splat2D {
  std::uint32_t gaussian_index = 0;
  Vec2 mean2d = Vec2::Zero();
  Mat2 cov2d = Mat2::Identity();
  Mat2 conic = Mat2::Identity();  // cov2d^-1
  double depth = 0;
  double opacity = 0;
  Vec3 color = Vec3::Zero();
  // Inclusive tile range touched by the 3-sigma bounding box.
  int tile_x0 = 0, tile_y0 = 0, tile_x1 = -1, tile_y1 = -1;
};

struct RenderOutput {
  Image color;   // H x W x 3
  Image alpha;   // H x W x 1, accumulated opacity
  /// Number of splats composited at each pixel.
  std::vector<std::uint32_t> contributors;
};

/// Saved forward state consumed by render_backward.
class RenderContext {
 public:
  bool valid() const { return valid_; }
  std::size_t gaussian_count() const { return gaussian_count_; }
  const std::vector<Splat2D>& splats() const { return splats_; }
  /// Splat slot per Gaussian, -1 when culled.
  const std::vector<std::int32_t>& slot_of_gaussian() const { return slot_of_gaussian_; }
  int tiles_x() const { return tiles_x_; }
  int tiles_y() const { return tiles_y_; }
  /// Splat slots of one tile, sorted front to back (ties by Gaussian index).
  std::span<const std::uint32_t> tile_list(int tile) const {
    return {tile_entries_.data() + tile_offsets_[tile],
            tile_offsets_[tile + 1] - tile_offsets_[tile]};
  }

 private:
  friend struct RenderAccess;
  bool valid_ = false;
  std::uint64_t input_hash_ = 0;
  std::size_t gaussian_count_ = 0;
  Camera camera_;
  Vec3 background_ = Vec3::Ones();
  std::vector<Splat2D> splats_;
  std::vector<std::int32_t> slot_of_gaussian_;
  std::vector<Vec3> cam_points_;  // camera-frame mean per splat
  int tiles_x_ = 0, tiles_y_ = 0;
  std::vector<std::size_t> tile_offsets_;
  std::vector<std::uint32_t> tile_entries_;
};

struct RenderResult {
  RenderOutput output;
  RenderContext context;
};

/// Gradients of a scalar loss w.r.t. every Gaussian parameter. `position` is
/// w.r.t. the positions the renderer was given (the deformed ones).
struct GaussianGradients {
  std::vector<double> position;
  std::vector<double> rotation;
  std::vector<double> log_scale;
  std::vector<double> opacity_logit;
  std::vector<double> color;
  /// |dL/d mean2d| per Gaussian in NDC units (the densification statistic); 0 when culled.
  std::vector<double> screen_grad_norm;

  GaussianGradients() = default;
  explicit GaussianGradients(std::size_t n) { resize(n); }
  void resize(std::size_t n);
  void set_zero();
  std::size_t size() const { return opacity_logit.size(); }
  /// this += scale * other (screen_grad_norm is not touched).
  void add(const GaussianGradients& other, double scale = 1.0);
};

/// Tile-based front-to-back compositing of the set at `deformed_positions`
/// (flat N*3), using the static rotation/scale/opacity/color.
RenderResult render(const GaussianSet& set, std::span<const double> deformed_positions,
                    const Camera& cam, const Vec3& background);

/// Exact gradients of sum(d_color * image). `set` and `deformed_positions` must be
/// the inputs of the render that produced `ctx`. Screen-space gradient norms are
/// returned in GaussianGradients::screen_grad_norm.
GaussianGradients render_backward(const RenderContext& ctx, const GaussianSet& set,
                                  std::span<const double> deformed_positions,
                                  const Image& d_color);

}  // namespace gs4d
