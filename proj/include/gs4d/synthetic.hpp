// Copyright 2026 The gs4d Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "gs4d/camera.hpp"
#include "gs4d/dataset.hpp"
#include "gs4d/scene.hpp"

namespace gs4d {

/// A ball of Gaussians translating along a known path, with ground-truth renders.
struct SyntheticSpec {
  std::size_t num_gaussians = 200;
  double ball_radius = 0.3;
  double gaussian_scale = 0.04;
  double opacity = 0.8;
  int width = 128;
  int height = 128;
  double fov_y_deg = 40;
  double camera_radius = 2.0;
  std::vector<double> view_azimuths = {0, 90, 180, 270};
  double view_elevation = 0;
  int num_anchors = 8;
  /// Offset(t) = start + (end - start) t + wobble * sin(2 pi t) along z.
  Vec3 motion_start = Vec3(-0.2, 0, 0);
  Vec3 motion_end = Vec3(0.2, 0, 0);
  double wobble = 0.05;
  std::uint64_t seed = 1;
};

class SyntheticScene {
 public:
  explicit SyntheticScene(SyntheticSpec spec);

  const SyntheticSpec& spec() const { return spec_; }
  const GaussianSet& canonical() const { return gt_; }
  const Intrinsics& intrinsics() const { return intrinsics_; }

  Vec3 offset(double t) const;
  std::vector<double> positions(double t) const;
  Camera camera(double azimuth_deg, double elevation_deg) const;
  /// Ground-truth image at normalized time t.
  Image render(const Camera& cam, double t, const Vec3& background = Vec3::Ones()) const;
  /// Labels from every configured view at every anchor; view 0 is the front view.
  AnchorDataset dataset() const;

 private:
  SyntheticSpec spec_;
  GaussianSet gt_;
  Intrinsics intrinsics_;
};

}  // namespace gs4d
