// Copyright 2026 The gs4d Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gs4d/hexplane.hpp"
#include "gs4d/rasterizer.hpp"
#include "gs4d/scene.hpp"

namespace gs4d {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-15;
};

/// Moments for one flat parameter array made of fixed-width rows.
class AdamGroup {
 public:
  AdamGroup() = default;
  AdamGroup(std::string name, std::size_t size, std::size_t row_width = 1);

  /// Bias-corrected update of params in place. Throws NumericalError naming the
  /// group if any gradient is non-finite (params untouched in that case).
  void step(std::span<double> params, std::span<const double> grads, double lr,
            const AdamConfig& cfg);

  /// Appends copies of the moment rows `rows[k]`, in order.
  void duplicate_rows(std::span<const std::size_t> rows);
  /// Keeps rows whose flag is true.
  void keep_rows(const std::vector<bool>& flags);

  const std::string& name() const { return name_; }
  std::size_t size() const { return m_.size(); }
  std::size_t rows() const { return row_width_ ? m_.size() / row_width_ : 0; }
  std::size_t row_width() const { return row_width_; }
  std::int64_t step_count() const { return step_; }
  std::vector<double>& m() { return m_; }
  std::vector<double>& v() { return v_; }
  const std::vector<double>& m() const { return m_; }
  const std::vector<double>& v() const { return v_; }
  void set_step_count(std::int64_t s) { step_ = s; }

  friend bool operator==(const AdamGroup&, const AdamGroup&) = default;

 private:
  std::string name_;
  std::size_t row_width_ = 1;
  std::vector<double> m_, v_;
  std::int64_t step_ = 0;
};

struct LearningRates {
  double position = 1.6e-4;
  /// Position step size shrinks exponentially to position * position_final_factor.
  double position_final_factor = 0.01;
  double rotation = 1e-3;
  double scale = 5e-3;
  double opacity = 5e-2;
  double color = 2.5e-3;
  double planes = 1.6e-3;
  double mlp = 1.6e-4;

  /// Position step size at `iteration` out of `total`.
  double position_at(std::int64_t iteration, std::int64_t total) const;
};

/// Optimizer state for all trainable groups: positions, rotations, scales,
/// opacities, colors (per Gaussian) and planes, mlp (field).
struct OptimizerState {
  AdamGroup positions, rotations, scales, opacities, colors;
  std::vector<AdamGroup> planes;  // one per field plane
  AdamGroup mlp;
  bool has_field = false;

  OptimizerState() = default;
  explicit OptimizerState(const GaussianSet& set);
  void attach_field(const HexPlaneField& field);

  /// Rows of every Gaussian group (they always agree; checked).
  std::size_t gaussian_rows() const;
  void duplicate_rows(std::span<const std::size_t> rows);
  void keep_rows(const std::vector<bool>& flags);

  /// Adam step on the Gaussian groups, then renormalizes quaternions and clamps colors.
  void step_gaussians(GaussianSet& set, const GaussianGradients& g, const LearningRates& lr,
                      double position_lr, const AdamConfig& cfg);
  void step_field(HexPlaneField& field, const FieldGradients& g, const LearningRates& lr,
                  const AdamConfig& cfg);

  std::vector<AdamGroup*> all_groups();
  std::vector<const AdamGroup*> all_groups() const;

  friend bool operator==(const OptimizerState&, const OptimizerState&) = default;
};

}  // namespace gs4d
