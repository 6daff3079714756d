// Copyright 2026 The gs4d Authors
// SPDX-License-Identifier: Apache-2.0

#include "gs4d/scene.hpp"

#include <algorithm>
#include <limits>

#include "gs4d/error.hpp"
#include "gs4d/rng.hpp"

namespace gs4d {

Mat3 quaternion_to_rotation(const Vec4& q_raw) {
  const Vec4 q = q_raw / q_raw.norm();
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Mat3 r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

Vec4 quaternion_to_rotation_vjp(const Vec4& q_raw, const Mat3& dr) {
  const double len = q_raw.norm();
  const Vec4 q = q_raw / len;
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Mat3 dw, dx, dy, dz;
  dw << 0, -2 * z, 2 * y, 2 * z, 0, -2 * x, -2 * y, 2 * x, 0;
  dx << 0, 2 * y, 2 * z, 2 * y, -4 * x, -2 * w, 2 * z, 2 * w, -4 * x;
  dy << -4 * y, 2 * x, 2 * w, 2 * x, 0, 2 * z, -2 * w, 2 * z, -4 * y;
  dz << -4 * z, -2 * w, 2 * x, 2 * w, -4 * z, 2 * y, 2 * x, 2 * y, 0;
  const Vec4 dn(dr.cwiseProduct(dw).sum(), dr.cwiseProduct(dx).sum(), dr.cwiseProduct(dy).sum(),
                dr.cwiseProduct(dz).sum());
  // d(q/|q|)/dq = (I - n n^T) / |q|
  return (dn - q * q.dot(dn)) / len;
}

Mat3 covariance_from_params(const Vec4& q, const Vec3& log_scale) {
  if (!q.allFinite() || !log_scale.allFinite())
    throw ParameterError("covariance_from_params: non-finite parameters");
  if (q.norm() == 0.0) throw ParameterError("covariance_from_params: zero quaternion");
  const Mat3 r = quaternion_to_rotation(q);
  const Vec3 var = (2.0 * log_scale).array().exp();
  return r * var.asDiagonal() * r.transpose();
}

Mat3 Gaussian::covariance() const { return covariance_from_params(rotation, log_scale); }

double gaussian_density(const Gaussian& g, const Vec3& p) {
  const Vec3 var = (2.0 * g.log_scale).array().exp();
  if (!(var.minCoeff() >= kMinVariance))
    throw DegenerateCovarianceError("gaussian_density: variance below 1e-12");
  const Mat3 r = quaternion_to_rotation(g.rotation);
  // Rotate the offset into the Gaussian's principal frame instead of inverting Sigma.
  const Vec3 local = r.transpose() * (p - g.position);
  const double maha = (local.array().square() / var.array()).sum();
  return std::exp(-0.5 * maha);
}

Gaussian GaussianSet::at(std::size_t i) const {
  Gaussian g;
  g.position = position(i);
  g.rotation = rotation(i);
  g.log_scale = log_scale(i);
  g.opacity_logit = opacity_[i];
  g.color = color(i);
  return g;
}

void GaussianSet::set(std::size_t i, const Gaussian& g) {
  std::copy_n(g.position.data(), 3, &position_[3 * i]);
  std::copy_n(g.rotation.data(), 4, &rotation_[4 * i]);
  std::copy_n(g.log_scale.data(), 3, &log_scale_[3 * i]);
  opacity_[i] = g.opacity_logit;
  std::copy_n(g.color.data(), 3, &color_[3 * i]);
}

void GaussianSet::push_back(const Gaussian& g) {
  position_.insert(position_.end(), g.position.data(), g.position.data() + 3);
  rotation_.insert(rotation_.end(), g.rotation.data(), g.rotation.data() + 4);
  log_scale_.insert(log_scale_.end(), g.log_scale.data(), g.log_scale.data() + 3);
  opacity_.push_back(g.opacity_logit);
  color_.insert(color_.end(), g.color.data(), g.color.data() + 3);
}

void GaussianSet::reserve(std::size_t n) {
  position_.reserve(3 * n);
  rotation_.reserve(4 * n);
  log_scale_.reserve(3 * n);
  opacity_.reserve(n);
  color_.reserve(3 * n);
}

namespace {
template <int Dim>
void keep_rows(std::vector<double>& v, const std::vector<bool>& flags) {
  std::size_t out = 0;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (!flags[i]) continue;
    if (out != i) std::copy_n(&v[Dim * i], Dim, &v[Dim * out]);
    ++out;
  }
  v.resize(Dim * out);
}
}  // namespace

void GaussianSet::keep(const std::vector<bool>& flags) {
  if (flags.size() != size()) throw ParameterError("GaussianSet::keep: flag count mismatch");
  keep_rows<3>(position_, flags);
  keep_rows<4>(rotation_, flags);
  keep_rows<3>(log_scale_, flags);
  keep_rows<1>(opacity_, flags);
  keep_rows<3>(color_, flags);
}

void GaussianSet::project_constraints() {
  for (std::size_t i = 0; i < size(); ++i) {
    double* q = &rotation_[4 * i];
    const double n = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
    if (n > 0) {
      for (int k = 0; k < 4; ++k) q[k] /= n;
    } else {
      q[0] = 1;
      q[1] = q[2] = q[3] = 0;
    }
  }
  for (double& c : color_) c = std::clamp(c, 0.0, 1.0);
}

void GaussianSet::check_finite() const {
  auto check = [](const std::vector<double>& v, const char* name) {
    for (double x : v)
      if (!std::isfinite(x)) throw NumericalError(std::string("non-finite Gaussian ") + name);
  };
  check(position_, "position");
  check(rotation_, "rotation");
  check(log_scale_, "log_scale");
  check(opacity_, "opacity");
  check(color_, "color");
}

GaussianSet init_unit_sphere(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ParameterError("init_unit_sphere: n must be >= 1");
  GaussianSet set(seed);
  set.reserve(n);
  CounterRng rng(seed, /*stream=*/0x5eed);
  while (set.size() < n) {
    const Vec3 p(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    if (p.squaredNorm() > 1.0) continue;
    Gaussian g;
    g.position = p;
    set.push_back(g);
  }
  return set;
}

double normalize_to_cube(GaussianSet& set, double extent) {
  if (set.empty()) return 1.0;
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (std::size_t i = 0; i < set.size(); ++i) {
    lo = lo.cwiseMin(set.position(i));
    hi = hi.cwiseMax(set.position(i));
  }
  const Vec3 centre = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo).maxCoeff();
  const double factor = half > 0 ? extent / half : 1.0;
  auto pos = set.positions();
  for (std::size_t i = 0; i < set.size(); ++i)
    for (int k = 0; k < 3; ++k) pos[3 * i + k] = (pos[3 * i + k] - centre[k]) * factor;
  return factor;
}

}  // namespace gs4d
