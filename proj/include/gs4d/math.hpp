// Copyright 2026 The gs4d Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <cmath>

namespace gs4d {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
/// Quaternion stored as (w, x, y, z).
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double logit(double p) { return std::log(p / (1.0 - p)); }

/// Rotation matrix of q / |q|.
Mat3 quaternion_to_rotation(const Vec4& q);

/// Vector-Jacobian product of quaternion_to_rotation: returns dL/dq given dL/dR,
/// including the normalization step.
Vec4 quaternion_to_rotation_vjp(const Vec4& q, const Mat3& dR);

}  // namespace gs4d
