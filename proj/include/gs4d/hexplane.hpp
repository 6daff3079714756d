// Copyright 2026 The gs4d Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gs4d/scene.hpp"

namespace gs4d {

/// Axis pair of one factor plane. The first axis indexes rows, the second columns.
enum class PlaneAxes : int { XY = 0, XZ = 1, YZ = 2, XT = 3, YT = 4, ZT = 5 };
inline constexpr int kPlanesPerLevel = 6;
inline constexpr std::array<PlaneAxes, 6> kAllPlaneAxes = {
    PlaneAxes::XY, PlaneAxes::XZ, PlaneAxes::YZ, PlaneAxes::XT, PlaneAxes::YT, PlaneAxes::ZT};

inline bool is_time_plane(PlaneAxes a) { return static_cast<int>(a) >= 3; }
const char* plane_axes_name(PlaneAxes a);

/// rows x cols grid of `channels`-vectors, channel innermost.
struct FeaturePlane {
  int rows = 0;
  int cols = 0;
  int channels = 0;
  PlaneAxes axes = PlaneAxes::XY;
  std::vector<double> values;

  FeaturePlane() = default;
  FeaturePlane(int rows, int cols, int channels, PlaneAxes axes, double fill = 0.0);

  std::size_t size() const { return values.size(); }
  double& at(int r, int c, int ch) {
    return values[(static_cast<std::size_t>(r) * cols + c) * channels + ch];
  }
  double at(int r, int c, int ch) const {
    return values[(static_cast<std::size_t>(r) * cols + c) * channels + ch];
  }

  friend bool operator==(const FeaturePlane&, const FeaturePlane&) = default;
};

/// Corner-aligned bilinear lookup: a in [0,1] spans rows 0..rows-1, b spans columns.
/// Inputs are clamped. Requires rows, cols >= 2.
void query_plane(const FeaturePlane& plane, double a, double b, std::span<double> out);
std::vector<double> query_plane(const FeaturePlane& plane, double a, double b);

/// Adds d_out-weighted bilinear weights into d_values and, when non-null, writes
/// d/da and d/db of <d_out, query_plane(plane, a, b)> (zero outside [0,1]).
void query_plane_backward(const FeaturePlane& plane, double a, double b,
                          std::span<const double> d_out, std::span<double> d_values, double* d_a,
                          double* d_b);

struct FieldConfig {
  int num_levels = 2;
  int base_resolution = 64;
  /// Columns of the space-time planes. <= 0 means "same as the spatial resolution".
  int time_resolution = 8;
  int channels = 16;
  int hidden_width = 64;
  /// Spatial planes start uniform in [lo, hi]; space-time planes start at one.
  double spatial_init_lo = 0.1;
  double spatial_init_hi = 0.5;
  std::uint64_t seed = 0;

  friend bool operator==(const FieldConfig&, const FieldConfig&) = default;
};

/// Time resolution rule: max(num_anchors, 8).
int default_time_resolution(int num_anchors);

/// 2-hidden-layer ReLU perceptron with flat parameter storage
/// [W1 | b1 | W2 | b2 | W3 | b3], weights column-major (out x in).
class Mlp {
 public:
  Mlp() = default;
  Mlp(int in_dim, int hidden, int out_dim);

  int in_dim() const { return in_; }
  int hidden() const { return hidden_; }
  int out_dim() const { return out_; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) hidden weights; zero biases and a
  /// zero output layer.
  void initialize(std::uint64_t seed);

  /// Batched forward: inputs is in_dim x n (column per sample); returns out_dim x n.
  std::vector<double> forward(std::span<const double> inputs, std::size_t n) const;
  /// Batched backward: accumulates parameter gradients into d_params and writes
  /// d_inputs (in_dim x n).
  void backward(std::span<const double> inputs, std::size_t n, std::span<const double> d_out,
                std::span<double> d_params, std::span<double> d_inputs) const;

  friend bool operator==(const Mlp&, const Mlp&) = default;

 private:
  int in_ = 0, hidden_ = 0, out_ = 0;
  std::vector<double> params_;
};

/// Multi-resolution six-plane field plus the MLP decoding position offsets.
class HexPlaneField {
 public:
  HexPlaneField() = default;
  explicit HexPlaneField(const FieldConfig& cfg);

  const FieldConfig& config() const { return config_; }
  int num_levels() const { return config_.num_levels; }
  int channels() const { return config_.channels; }
  int feature_dim() const { return config_.channels * config_.num_levels; }
  int spatial_resolution(int level) const { return config_.base_resolution << level; }
  int time_resolution(int level) const;

  FeaturePlane& plane(int level, PlaneAxes a) {
    return planes_[level * kPlanesPerLevel + static_cast<int>(a)];
  }
  const FeaturePlane& plane(int level, PlaneAxes a) const {
    return planes_[level * kPlanesPerLevel + static_cast<int>(a)];
  }
  std::vector<FeaturePlane>& planes() { return planes_; }
  const std::vector<FeaturePlane>& planes() const { return planes_; }
  Mlp& mlp() { return mlp_; }
  const Mlp& mlp() const { return mlp_; }

  std::size_t parameter_count() const;
  void check_finite() const;

  friend bool operator==(const HexPlaneField&, const HexPlaneField&) = default;

 private:
  FieldConfig config_;
  std::vector<FeaturePlane> planes_;  // level-major, kAllPlaneAxes order
  Mlp mlp_;
};

/// Gradient buffers shaped like a HexPlaneField.
struct FieldGradients {
  std::vector<std::vector<double>> planes;
  std::vector<double> mlp;

  FieldGradients() = default;
  explicit FieldGradients(const HexPlaneField& field);
  void set_zero();
  void add(const FieldGradients& other, double scale = 1.0);
};

/// Concatenation over levels of the elementwise product of the six plane lookups.
/// x, y, z in [-1,1] and t in [0,1] (clamped).
std::vector<double> field_features(const HexPlaneField& field, double x, double y, double z,
                                   double t);

/// Position offsets (flat N*3) for every Gaussian at normalized time t.
std::vector<double> deformation_offsets(const HexPlaneField& field, const GaussianSet& set,
                                        double t);

/// mu + offset for every Gaussian (flat N*3).
std::vector<double> deform(const HexPlaneField& field, const GaussianSet& set, double t);

/// Back-propagates dL/d(deformed positions) through deform(): accumulates into
/// field gradients and into dL/d(canonical positions) (flat N*3, adds the identity
/// path as well as the path through the feature lookups).
void deform_backward(const HexPlaneField& field, const GaussianSet& set, double t,
                     std::span<const double> d_deformed, FieldGradients& d_field,
                     std::span<double> d_positions);

}  // namespace gs4d
