// Copyright 2026 The gs4d Authors
// SPDX-License-Identifier: Apache-2.0

#include "gs4d/optimizer.hpp"

#include <cmath>

#include "gs4d/error.hpp"

namespace gs4d {

AdamGroup::AdamGroup(std::string name, std::size_t size, std::size_t row_width)
    : name_(std::move(name)), row_width_(row_width), m_(size, 0.0), v_(size, 0.0) {
  if (row_width == 0 || size % row_width != 0)
    throw ParameterError("AdamGroup " + name_ + ": size must be a multiple of the row width");
}

namespace {
void check_grads(const std::string& name, std::span<const double> g) {
  for (double v : g)
    if (!std::isfinite(v)) throw NumericalError("non-finite gradient in parameter group " + name);
}
}  // namespace

void AdamGroup::step(std::span<double> params, std::span<const double> grads, double lr,
                     const AdamConfig& cfg) {
  if (params.size() != m_.size() || grads.size() != m_.size())
    throw ParameterError("AdamGroup " + name_ + ": parameter/gradient size mismatch");
  check_grads(name_, grads);
  ++step_;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    m_[i] = cfg.beta1 * m_[i] + (1 - cfg.beta1) * g;
    v_[i] = cfg.beta2 * v_[i] + (1 - cfg.beta2) * g * g;
    const double mh = m_[i] / bc1;
    const double vh = v_[i] / bc2;
    params[i] -= lr * mh / (std::sqrt(vh) + cfg.eps);
  }
}

void AdamGroup::duplicate_rows(std::span<const std::size_t> rows) {
  const std::size_t n = this->rows();
  m_.reserve(m_.size() + rows.size() * row_width_);
  v_.reserve(v_.size() + rows.size() * row_width_);
  for (std::size_t r : rows) {
    if (r >= n) throw ParameterError("AdamGroup " + name_ + ": row out of range");
    for (std::size_t k = 0; k < row_width_; ++k) {
      m_.push_back(m_[r * row_width_ + k]);
      v_.push_back(v_[r * row_width_ + k]);
    }
  }
}

void AdamGroup::keep_rows(const std::vector<bool>& flags) {
  if (flags.size() != rows()) throw ParameterError("AdamGroup " + name_ + ": flag count mismatch");
  std::size_t out = 0;
  for (std::size_t r = 0; r < flags.size(); ++r) {
    if (!flags[r]) continue;
    for (std::size_t k = 0; k < row_width_; ++k) {
      m_[out * row_width_ + k] = m_[r * row_width_ + k];
      v_[out * row_width_ + k] = v_[r * row_width_ + k];
    }
    ++out;
  }
  m_.resize(out * row_width_);
  v_.resize(out * row_width_);
}

double LearningRates::position_at(std::int64_t iteration, std::int64_t total) const {
  if (total <= 1) return position;
  const double f = static_cast<double>(std::min(iteration, total - 1)) / static_cast<double>(total - 1);
  return position * std::pow(position_final_factor, f);
}

OptimizerState::OptimizerState(const GaussianSet& set)
    : positions("positions", set.positions().size(), 3),
      rotations("rotations", set.rotations().size(), 4),
      scales("scales", set.log_scales().size(), 3),
      opacities("opacities", set.opacity_logits().size(), 1),
      colors("colors", set.colors().size(), 3) {}

void OptimizerState::attach_field(const HexPlaneField& field) {
  planes.clear();
  for (std::size_t i = 0; i < field.planes().size(); ++i) {
    const FeaturePlane& p = field.planes()[i];
    planes.emplace_back("planes/l" + std::to_string(i / kPlanesPerLevel) + "/" +
                            plane_axes_name(p.axes),
                        p.size(), 1);
  }
  mlp = AdamGroup("mlp", field.mlp().params().size(), 1);
  has_field = true;
}

std::size_t OptimizerState::gaussian_rows() const {
  const std::size_t n = positions.rows();
  if (rotations.rows() != n || scales.rows() != n || opacities.rows() != n || colors.rows() != n)
    throw ContractError("optimizer Gaussian groups disagree on row count");
  return n;
}

void OptimizerState::duplicate_rows(std::span<const std::size_t> rows) {
  for (AdamGroup* g : {&positions, &rotations, &scales, &opacities, &colors}) g->duplicate_rows(rows);
}

void OptimizerState::keep_rows(const std::vector<bool>& flags) {
  for (AdamGroup* g : {&positions, &rotations, &scales, &opacities, &colors}) g->keep_rows(flags);
}

void OptimizerState::step_gaussians(GaussianSet& set, const GaussianGradients& g,
                                    const LearningRates& lr, double position_lr,
                                    const AdamConfig& cfg) {
  if (gaussian_rows() != set.size() || g.size() != set.size())
    throw ContractError("optimizer rows do not match the Gaussian count");
  check_grads(positions.name(), g.position);
  check_grads(rotations.name(), g.rotation);
  check_grads(scales.name(), g.log_scale);
  check_grads(opacities.name(), g.opacity_logit);
  check_grads(colors.name(), g.color);
  positions.step(set.positions(), g.position, position_lr, cfg);
  rotations.step(set.rotations(), g.rotation, lr.rotation, cfg);
  scales.step(set.log_scales(), g.log_scale, lr.scale, cfg);
  opacities.step(set.opacity_logits(), g.opacity_logit, lr.opacity, cfg);
  colors.step(set.colors(), g.color, lr.color, cfg);
  set.project_constraints();
}

void OptimizerState::step_field(HexPlaneField& field, const FieldGradients& g,
                                const LearningRates& lr, const AdamConfig& cfg) {
  if (!has_field || planes.size() != field.planes().size() || g.planes.size() != planes.size())
    throw ContractError("optimizer field groups do not match the field");
  for (std::size_t i = 0; i < planes.size(); ++i) check_grads(planes[i].name(), g.planes[i]);
  check_grads(mlp.name(), g.mlp);
  for (std::size_t i = 0; i < planes.size(); ++i)
    planes[i].step(field.planes()[i].values, g.planes[i], lr.planes, cfg);
  mlp.step(field.mlp().params(), g.mlp, lr.mlp, cfg);
}

std::vector<AdamGroup*> OptimizerState::all_groups() {
  std::vector<AdamGroup*> out = {&positions, &rotations, &scales, &opacities, &colors};
  if (has_field) {
    for (auto& p : planes) out.push_back(&p);
    out.push_back(&mlp);
  }
  return out;
}

std::vector<const AdamGroup*> OptimizerState::all_groups() const {
  std::vector<const AdamGroup*> out = {&positions, &rotations, &scales, &opacities, &colors};
  if (has_field) {
    for (const auto& p : planes) out.push_back(&p);
    out.push_back(&mlp);
  }
  return out;
}

}  // namespace gs4d
