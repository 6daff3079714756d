// Copyright 2026 The gs4d Authors
// SPDX-License-Identifier: Apache-2.0

#include "gs4d/synthetic.hpp"

#include <cmath>
#include <numbers>

#include "gs4d/error.hpp"
#include "gs4d/rasterizer.hpp"
#include "gs4d/rng.hpp"

namespace gs4d {

SyntheticScene::SyntheticScene(SyntheticSpec spec)
    : spec_(std::move(spec)),
      gt_(spec_.seed),
      intrinsics_(Intrinsics::from_fov(spec_.fov_y_deg, spec_.width, spec_.height)) {
  if (spec_.num_gaussians == 0 || spec_.view_azimuths.empty() || spec_.num_anchors < 2)
    throw ParameterError("synthetic scene: need Gaussians, views and >= 2 anchors");
  CounterRng rng(spec_.seed, 0x5c3e);
  while (gt_.size() < spec_.num_gaussians) {
    const Vec3 p(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    if (p.squaredNorm() > 1) continue;
    Gaussian g;
    g.position = p * spec_.ball_radius;
    Vec4 q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
    g.rotation = q / q.norm();
    for (int k = 0; k < 3; ++k)
      g.log_scale[k] = std::log(spec_.gaussian_scale * rng.uniform(0.7, 1.3));
    g.opacity_logit = logit(spec_.opacity);
    // Smoothly varying colors so that views and frames are distinguishable.
    g.color = (0.5 * (p.array() + 1.0)).matrix().cwiseMax(0.05).cwiseMin(0.95);
    gt_.push_back(g);
  }
}

Vec3 SyntheticScene::offset(double t) const {
  Vec3 o = spec_.motion_start + (spec_.motion_end - spec_.motion_start) * t;
  o.z() += spec_.wobble * std::sin(2 * std::numbers::pi * t);
  return o;
}

std::vector<double> SyntheticScene::positions(double t) const {
  std::vector<double> p = gt_.position_vector();
  const Vec3 o = offset(t);
  for (std::size_t i = 0; i < gt_.size(); ++i)
    for (int k = 0; k < 3; ++k) p[3 * i + k] += o[k];
  return p;
}

Camera SyntheticScene::camera(double azimuth_deg, double elevation_deg) const {
  OrbitPose pose;
  pose.azimuth_deg = azimuth_deg;
  pose.elevation_deg = elevation_deg;
  pose.radius = spec_.camera_radius;
  return orbit_to_camera(pose, intrinsics_);
}

Image SyntheticScene::render(const Camera& cam, double t, const Vec3& background) const {
  return gs4d::render(gt_, positions(t), cam, background).output.color;
}

AnchorDataset SyntheticScene::dataset() const {
  AnchorDataset ds;
  ds.num_anchors = spec_.num_anchors;
  ds.radius = spec_.camera_radius;
  ds.front_view_index = 0;
  for (double az : spec_.view_azimuths) ds.cameras.push_back(camera(az, spec_.view_elevation));
  ds.labels.resize(ds.num_anchors);
  for (int a = 0; a < ds.num_anchors; ++a) {
    const double t = ds.anchor_time(a);
    for (const auto& cam : ds.cameras) ds.labels[a].push_back(render(cam, t));
    ds.reference.push_back(ds.labels[a][0]);
  }
  return ds;
}

}  // namespace gs4d
