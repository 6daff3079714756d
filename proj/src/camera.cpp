// Copyright 2026 The gs4d Authors
// SPDX-License-Identifier: Apache-2.0

#include "gs4d/camera.hpp"

#include <Eigen/Geometry>
#include <numbers>

#include "gs4d/error.hpp"

namespace gs4d {

namespace {
constexpr double kDegToRad = std::numbers::pi / 180.0;
}

Intrinsics Intrinsics::from_fov(double fov_y_deg, int width, int height) {
  if (width < 1 || height < 1) throw ParameterError("image size must be >= 1");
  Intrinsics k;
  k.fy = 0.5 * height / std::tan(0.5 * fov_y_deg * kDegToRad);
  k.fx = k.fy;
  k.cx = 0.5 * width;
  k.cy = 0.5 * height;
  k.width = width;
  k.height = height;
  return k;
}

Intrinsics Intrinsics::scaled_to(int new_width, int new_height) const {
  Intrinsics k = *this;
  const double sx = static_cast<double>(new_width) / width;
  const double sy = static_cast<double>(new_height) / height;
  k.fx *= sx;
  k.cx *= sx;
  k.fy *= sy;
  k.cy *= sy;
  k.width = new_width;
  k.height = new_height;
  return k;
}

void Camera::validate() const {
  if (!(fx > 0) || !(fy > 0)) throw ParameterError("camera focal lengths must be > 0");
  if (width < 1 || height < 1) throw ParameterError("camera image size must be >= 1");
  const Mat3 r = rotation();
  const double err = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (!(err < 1e-6)) throw ParameterError("camera rotation is not orthonormal");
  if (!world_to_cam.allFinite()) throw ParameterError("camera pose is not finite");
}

Camera orbit_to_camera(const OrbitPose& pose, const Intrinsics& k) {
  if (!(pose.radius > 0)) throw ParameterError("orbit radius must be > 0");
  const double az = pose.azimuth_deg * kDegToRad;
  const double el = pose.elevation_deg * kDegToRad;
  const Vec3 dir(std::sin(az) * std::cos(el), -std::cos(az) * std::cos(el), std::sin(el));
  const Vec3 center = pose.look_at + pose.radius * dir;
  const Vec3 forward = -dir;
  Vec3 up(0, 0, 1);
  if (std::abs(forward.dot(up)) > 1.0 - 1e-9) up = Vec3(0, 1, 0);  // straight up/down
  const Vec3 right = forward.cross(up).normalized();
  const Vec3 down = forward.cross(right);
  Mat3 r;
  r.row(0) = right;
  r.row(1) = down;
  r.row(2) = forward;
  Mat4 w2c = Mat4::Identity();
  w2c.topLeftCorner<3, 3>() = r;
  w2c.topRightCorner<3, 1>() = -r * center;
  return Camera(k, w2c);
}

ProjectedPoint project_point(const Camera& cam, const Vec3& x) {
  const Vec3 p = cam.rotation() * x + cam.translation();
  ProjectedPoint out;
  out.depth = p.z();
  out.culled = !(p.z() > kNearPlane);
  const double inv_z = 1.0 / p.z();
  out.pixel = Vec2(cam.fx * p.x() * inv_z + cam.cx, cam.fy * p.y() * inv_z + cam.cy);
  return out;
}

Eigen::Matrix<double, 2, 3> projection_jacobian(const Camera& cam, const Vec3& p) {
  const double iz = 1.0 / p.z();
  const double iz2 = iz * iz;
  Eigen::Matrix<double, 2, 3> j;
  j << cam.fx * iz, 0, -cam.fx * p.x() * iz2, 0, cam.fy * iz, -cam.fy * p.y() * iz2;
  return j;
}

std::optional<Mat2> project_covariance(const Camera& cam, const Vec3& mu, const Mat3& sigma) {
  const Mat3 w = cam.rotation();
  const Vec3 p = w * mu + cam.translation();
  if (!(p.z() > kNearPlane)) return std::nullopt;
  const Eigen::Matrix<double, 2, 3> t = projection_jacobian(cam, p) * w;
  Mat2 cov = t * sigma * t.transpose();
  cov(0, 1) = cov(1, 0) = 0.5 * (cov(0, 1) + cov(1, 0));
  cov.diagonal().array() += kLowPassVariance;
  return cov;
}

nlohmann::json camera_to_json(const Camera& cam) {
  nlohmann::json j;
  j["fx"] = cam.fx;
  j["fy"] = cam.fy;
  j["cx"] = cam.cx;
  j["cy"] = cam.cy;
  j["width"] = cam.width;
  j["height"] = cam.height;
  std::vector<double> m(16);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) m[4 * r + c] = cam.world_to_cam(r, c);
  j["world_to_cam"] = m;
  return j;
}

Camera camera_from_json(const nlohmann::json& j) {
  try {
    Intrinsics k;
    k.fx = j.at("fx").get<double>();
    k.fy = j.at("fy").get<double>();
    k.cx = j.at("cx").get<double>();
    k.cy = j.at("cy").get<double>();
    k.width = j.at("width").get<int>();
    k.height = j.at("height").get<int>();
    Camera cam;
    if (j.contains("orbit")) {
      const auto& o = j.at("orbit");
      OrbitPose pose;
      pose.azimuth_deg = o.at("azimuth_deg").get<double>();
      pose.elevation_deg = o.at("elevation_deg").get<double>();
      pose.radius = o.at("radius").get<double>();
      if (o.contains("look_at")) {
        const auto v = o.at("look_at").get<std::vector<double>>();
        if (v.size() != 3) throw FormatError("orbit.look_at must have 3 numbers");
        pose.look_at = Vec3(v[0], v[1], v[2]);
      }
      cam = orbit_to_camera(pose, k);
    } else {
      const auto m = j.at("world_to_cam").get<std::vector<double>>();
      if (m.size() != 16) throw FormatError("world_to_cam must have 16 numbers");
      Mat4 w2c;
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) w2c(r, c) = m[4 * r + c];
      cam = Camera(k, w2c);
    }
    cam.validate();
    return cam;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad camera JSON: ") + e.what());
  } catch (const ParameterError& e) {
    throw FormatError(std::string("bad camera JSON: ") + e.what());
  }
}

}  // namespace gs4d
