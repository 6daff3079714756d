// Copyright 2026 The gs4d Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gs4d/math.hpp"

namespace gs4d {

/// Initial activations for freshly created Gaussians.
inline constexpr double kInitScale = 0.05;
inline constexpr double kInitOpacity = 0.1;
inline constexpr double kInitGray = 0.5;
/// Any per-axis variance below this makes the covariance unusable.
inline constexpr double kMinVariance = 1e-12;

/// One canonical Gaussian. Opacity is stored as a logit and scale as a log
/// standard deviation so that unconstrained updates keep them in range; color is
/// RGB in [0,1] (degree-0, view independent) and is clamped by the optimizer.
struct Gaussian {
  Vec3 position = Vec3::Zero();
  Vec4 rotation = Vec4(1, 0, 0, 0);  // (w, x, y, z)
  Vec3 log_scale = Vec3::Constant(std::log(kInitScale));
  double opacity_logit = logit(kInitOpacity);
  Vec3 color = Vec3::Constant(kInitGray);

  double opacity() const { return sigmoid(opacity_logit); }
  Vec3 scale() const { return log_scale.array().exp(); }
  Mat3 covariance() const;
};

/// Growable ordered collection stored as one flat array per parameter group,
/// which is what the optimizer and the checkpoint format operate on.
class GaussianSet {
 public:
  static constexpr int kPositionDim = 3;
  static constexpr int kRotationDim = 4;
  static constexpr int kScaleDim = 3;
  static constexpr int kOpacityDim = 1;
  static constexpr int kColorDim = 3;

  GaussianSet() = default;
  explicit GaussianSet(std::uint64_t creation_seed) : creation_seed_(creation_seed) {}

  std::size_t size() const { return opacity_.size(); }
  bool empty() const { return opacity_.empty(); }

  Gaussian at(std::size_t i) const;
  void set(std::size_t i, const Gaussian& g);
  void push_back(const Gaussian& g);
  void reserve(std::size_t n);
  /// Keeps entries whose flag is true, preserving order.
  void keep(const std::vector<bool>& flags);

  Vec3 position(std::size_t i) const { return Vec3(&position_[3 * i]); }
  Vec4 rotation(std::size_t i) const { return Vec4(&rotation_[4 * i]); }
  Vec3 log_scale(std::size_t i) const { return Vec3(&log_scale_[3 * i]); }
  double opacity_logit(std::size_t i) const { return opacity_[i]; }
  Vec3 color(std::size_t i) const { return Vec3(&color_[3 * i]); }

  std::span<double> positions() { return position_; }
  std::span<double> rotations() { return rotation_; }
  std::span<double> log_scales() { return log_scale_; }
  std::span<double> opacity_logits() { return opacity_; }
  std::span<double> colors() { return color_; }
  std::span<const double> positions() const { return position_; }
  std::span<const double> rotations() const { return rotation_; }
  std::span<const double> log_scales() const { return log_scale_; }
  std::span<const double> opacity_logits() const { return opacity_; }
  std::span<const double> colors() const { return color_; }

  std::uint64_t creation_seed() const { return creation_seed_; }
  void set_creation_seed(std::uint64_t s) { creation_seed_ = s; }

  /// Renormalizes every quaternion and clamps colors into [0,1].
  void project_constraints();

  /// Throws NumericalError if any parameter is NaN/Inf.
  void check_finite() const;

  /// Positions as a flat N*3 vector (the undeformed input to the renderer).
  std::vector<double> position_vector() const { return position_; }

  friend bool operator==(const GaussianSet&, const GaussianSet&) = default;

 private:
  std::vector<double> position_;
  std::vector<double> rotation_;
  std::vector<double> log_scale_;
  std::vector<double> opacity_;
  std::vector<double> color_;
  std::uint64_t creation_seed_ = 0;
};

/// Sigma = R(q) diag(exp(2s)) R(q)^T. Throws ParameterError on non-finite input.
Mat3 covariance_from_params(const Vec4& q, const Vec3& log_scale);

/// exp(-1/2 d^T Sigma^-1 d) with d = p - mu. Throws DegenerateCovarianceError when
/// any exp(2s) < kMinVariance.
double gaussian_density(const Gaussian& g, const Vec3& p);

/// n Gaussians uniform in the unit ball (rejection sampled), default activations.
GaussianSet init_unit_sphere(std::size_t n, std::uint64_t seed);

/// Uniformly rescales and recentres positions (only) so that the bounding box
/// fits in [-extent, extent]^3. Returns the applied scale factor.
double normalize_to_cube(GaussianSet& set, double extent = 1.0);

}  // namespace gs4d
