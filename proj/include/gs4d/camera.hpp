// Copyright 2026 The gs4d Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>

#include "json.hpp"

#include "gs4d/math.hpp"

namespace gs4d {

inline constexpr double kNearPlane = 0.01;
/// Added to the projected covariance diagonal (pixels^2).
inline constexpr double kLowPassVariance = 0.3;

struct Intrinsics {
  double fx = 0, fy = 0, cx = 0, cy = 0;
  int width = 0, height = 0;

  /// Square pixels, principal point at the image centre.
  static Intrinsics from_fov(double fov_y_deg, int width, int height);
  /// Same field of view at another resolution.
  Intrinsics scaled_to(int new_width, int new_height) const;
};

/// Pinhole camera, OpenCV convention: +z forward, +y down. Pixel (i, j) has its
/// centre at coordinates (i, j).
struct Camera {
  double fx = 1, fy = 1, cx = 0, cy = 0;
  int width = 1, height = 1;
  Mat4 world_to_cam = Mat4::Identity();

  Camera() = default;
  Camera(const Intrinsics& k, const Mat4& w2c)
      : fx(k.fx), fy(k.fy), cx(k.cx), cy(k.cy), width(k.width), height(k.height),
        world_to_cam(w2c) {}

  Mat3 rotation() const { return world_to_cam.topLeftCorner<3, 3>(); }
  Vec3 translation() const { return world_to_cam.topRightCorner<3, 1>(); }
  /// Camera centre in world coordinates, -R^T t.
  Vec3 center() const { return -rotation().transpose() * translation(); }
  Intrinsics intrinsics() const { return {fx, fy, cx, cy, width, height}; }

  /// Throws ParameterError unless the invariants hold.
  void validate() const;

  friend bool operator==(const Camera&, const Camera&) = default;
};

/// Azimuth 0 / elevation 0 looks from -y towards look_at; azimuth grows towards +x;
/// world up is +z.
struct OrbitPose {
  double azimuth_deg = 0;
  double elevation_deg = 0;
  double radius = 1;
  Vec3 look_at = Vec3::Zero();
};

Camera orbit_to_camera(const OrbitPose& pose, const Intrinsics& k);

struct ProjectedPoint {
  Vec2 pixel;
  double depth = 0;
  bool culled = false;  // depth <= kNearPlane
};

ProjectedPoint project_point(const Camera& cam, const Vec3& x);

/// Perspective Jacobian d(u,v)/d(camera-frame point) at `p_cam`.
Eigen::Matrix<double, 2, 3> projection_jacobian(const Camera& cam, const Vec3& p_cam);

/// J W Sigma W^T J^T + kLowPassVariance * I, or nullopt when the mean is behind
/// the near plane.
std::optional<Mat2> project_covariance(const Camera& cam, const Vec3& mu, const Mat3& sigma);

nlohmann::json camera_to_json(const Camera& cam);
/// Accepts either the explicit matrix form or the {"orbit": {...}, fx, ...} form.
Camera camera_from_json(const nlohmann::json& j);

}  // namespace gs4d
