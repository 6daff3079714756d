// Copyright 2026 The gs4d Authors
// SPDX-License-Identifier: Apache-2.0

#include "gs4d/densify.hpp"

#include <cmath>

#include "gs4d/error.hpp"

namespace gs4d {

void DensifyStats::reset(std::size_t n) {
  grad_sum.assign(n, 0.0);
  visible_count.assign(n, 0);
}

void DensifyStats::accumulate(const GaussianGradients& g,
                              const std::vector<std::int32_t>& slot_of_gaussian) {
  if (g.screen_grad_norm.size() != size() || slot_of_gaussian.size() != size())
    throw ContractError("DensifyStats: size differs from the Gaussian count");
  for (std::size_t i = 0; i < size(); ++i) {
    if (slot_of_gaussian[i] < 0) continue;
    grad_sum[i] += g.screen_grad_norm[i];
    ++visible_count[i];
  }
}

double DensifyStats::mean(std::size_t i) const {
  return visible_count[i] ? grad_sum[i] / visible_count[i] : 0.0;
}

DensifyResult densify_and_prune(GaussianSet& set, DensifyStats& stats, const DensifyConfig& cfg,
                                OptimizerState* opt) {
  if (stats.size() != set.size()) throw ContractError("densify: stats size differs from set");
  if (opt && opt->gaussian_rows() != set.size())
    throw ContractError("densify: optimizer rows differ from set");
  DensifyResult res;
  const std::size_t n0 = set.size();
  const double shrink = std::log(cfg.split_factor);
  std::vector<std::size_t> source_rows;

  for (std::size_t i = 0; i < n0; ++i) {
    if (stats.mean(i) <= cfg.grad_threshold) continue;
    if (cfg.max_gaussians && set.size() >= cfg.max_gaussians) break;
    Gaussian g = set.at(i);
    const Vec3 scale = g.scale();
    int axis = 0;
    scale.maxCoeff(&axis);
    const Vec3 offset = quaternion_to_rotation(g.rotation).col(axis) * scale[axis];
    if (scale.maxCoeff() < cfg.clone_scale_threshold) {
      Gaussian c = g;
      c.position += offset;
      set.push_back(c);
      ++res.cloned;
    } else {
      Gaussian a = g, b = g;
      a.position += offset;
      b.position -= offset;
      a.log_scale.array() -= shrink;
      b.log_scale.array() -= shrink;
      set.set(i, a);
      set.push_back(b);
      ++res.split;
    }
    source_rows.push_back(i);
  }
  if (opt) opt->duplicate_rows(source_rows);

  std::vector<bool> keep(set.size(), true);
  std::size_t kept = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    keep[i] = sigmoid(set.opacity_logit(i)) >= cfg.prune_opacity;
    kept += keep[i];
  }
  if (kept == 0) throw TrainingError("densify_and_prune: pruning would empty the scene");
  res.pruned = set.size() - kept;
  if (res.pruned) {
    set.keep(keep);
    if (opt) opt->keep_rows(keep);
  }
  stats.reset(set.size());
  return res;
}

}  // namespace gs4d
