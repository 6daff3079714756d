// Copyright 2026 The gs4d Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "gs4d/optimizer.hpp"
#include "gs4d/rasterizer.hpp"
#include "gs4d/scene.hpp"

namespace gs4d {

struct DensifyConfig {
  bool enabled = true;
  int interval = 100;
  /// Mean screen-space gradient norm (NDC units) that triggers densification.
  double grad_threshold = 2e-4;
  /// Gaussians with every exp(s) below this are cloned, others split.
  double clone_scale_threshold = 0.01;
  double split_factor = 1.6;
  double prune_opacity = 0.005;
  /// 0 means unlimited; otherwise no clone/split once the count reaches it.
  std::size_t max_gaussians = 0;
};

/// Screen-gradient statistics accumulated between densification rounds.
struct DensifyStats {
  std::vector<double> grad_sum;
  std::vector<std::uint32_t> visible_count;

  DensifyStats() = default;
  explicit DensifyStats(std::size_t n) { reset(n); }
  void reset(std::size_t n);
  std::size_t size() const { return grad_sum.size(); }
  /// Adds the norms of the Gaussians that were visible in one render.
  void accumulate(const GaussianGradients& g, const std::vector<std::int32_t>& slot_of_gaussian);
  double mean(std::size_t i) const;

  friend bool operator==(const DensifyStats&, const DensifyStats&) = default;
};

struct DensifyResult {
  std::size_t cloned = 0;
  std::size_t split = 0;
  std::size_t pruned = 0;
};

/// Clone/split high-gradient Gaussians, then prune transparent ones. Optimizer
/// rows follow the same edits when `opt` is given. Stats are reset to the new size.
/// Throws TrainingError if pruning would leave the set empty.
DensifyResult densify_and_prune(GaussianSet& set, DensifyStats& stats, const DensifyConfig& cfg,
                                OptimizerState* opt);

}  // namespace gs4d
