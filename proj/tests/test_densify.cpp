// Copyright 2026 The gs4d Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gs4d/densify.hpp"
#include "gs4d/error.hpp"
#include "oracles.hpp"

namespace gs4d {
namespace {

GaussianSet uniform_set(std::size_t n, double scale, double opacity) {
  GaussianSet set;
  for (std::size_t i = 0; i < n; ++i) {
    Gaussian g;
    g.position = Vec3(0.1 * i, 0, 0);
    g.log_scale = Vec3(std::log(scale), std::log(scale / 2), std::log(scale / 4));
    g.opacity_logit = logit(opacity);
    set.push_back(g);
  }
  return set;
}

DensifyStats stats_with(std::size_t n, std::size_t hot, double value) {
  DensifyStats s(n);
  s.grad_sum[hot] = value;
  s.visible_count[hot] = 1;
  return s;
}

TEST(Densify, QuietSetUnchanged) {
  GaussianSet set = uniform_set(5, 0.05, 0.5);
  const GaussianSet before = set;
  DensifyStats stats(5);
  const DensifyResult r = densify_and_prune(set, stats, DensifyConfig{}, nullptr);
  EXPECT_EQ(set, before);
  EXPECT_EQ(r.cloned + r.split + r.pruned, 0u);
}

TEST(Densify, SmallHotGaussianIsCloned) {
  GaussianSet set = uniform_set(3, 0.005, 0.5);
  DensifyStats stats = stats_with(3, 1, 1.0);
  const DensifyResult r = densify_and_prune(set, stats, DensifyConfig{}, nullptr);
  EXPECT_EQ(r.cloned, 1u);
  ASSERT_EQ(set.size(), 4u);
  EXPECT_EQ(set.at(1).position, Vec3(0.1, 0, 0));
  EXPECT_EQ(set.log_scale(3), set.log_scale(1));
  // The copy moves one standard deviation along the largest axis.
  EXPECT_NEAR((set.position(3) - set.position(1)).norm(), 0.005, 1e-12);
  EXPECT_EQ(stats.size(), 4u);
  EXPECT_EQ(stats.grad_sum[1], 0.0);
}

TEST(Densify, LargeHotGaussianIsSplit) {
  GaussianSet set = uniform_set(2, 0.1, 0.5);
  const Vec3 mu = set.position(0), ls = set.log_scale(0);
  DensifyStats stats = stats_with(2, 0, 1.0);
  const DensifyResult r = densify_and_prune(set, stats, DensifyConfig{}, nullptr);
  EXPECT_EQ(r.split, 1u);
  ASSERT_EQ(set.size(), 3u);
  for (std::size_t k : {0u, 2u}) {
    for (int a = 0; a < 3; ++a) EXPECT_NEAR(set.log_scale(k)[a], ls[a] - std::log(1.6), 1e-12);
    EXPECT_NEAR((set.position(k) - mu).norm(), 0.1, 1e-12);
  }
  EXPECT_LT(((set.position(0) + set.position(2)) / 2 - mu).norm(), 1e-12);
}

TEST(Densify, TransparentArePruned) {
  GaussianSet set = uniform_set(4, 0.05, 0.5);
  Gaussian g = set.at(2);
  g.opacity_logit = logit(0.001);
  set.set(2, g);
  std::mt19937_64 gen(1);
  OptimizerState opt(set);
  DensifyStats stats(4);
  const DensifyResult r = densify_and_prune(set, stats, DensifyConfig{}, &opt);
  EXPECT_EQ(r.pruned, 1u);
  EXPECT_EQ(set.size(), 3u);
  EXPECT_EQ(opt.gaussian_rows(), 3u);
  EXPECT_LT((set.position(2) - Vec3(0.3, 0, 0)).norm(), 1e-15);
}

TEST(Densify, PruningEverythingFails) {
  GaussianSet set = uniform_set(3, 0.05, 0.001);
  DensifyStats stats(3);
  EXPECT_THROW(densify_and_prune(set, stats, DensifyConfig{}, nullptr), TrainingError);
}

TEST(Densify, CapStopsGrowth) {
  GaussianSet set = uniform_set(4, 0.005, 0.5);
  DensifyStats stats(4);
  for (std::size_t i = 0; i < 4; ++i) stats.grad_sum[i] = 1, stats.visible_count[i] = 1;
  DensifyConfig cfg;
  cfg.max_gaussians = 6;
  densify_and_prune(set, stats, cfg, nullptr);
  EXPECT_EQ(set.size(), 6u);
}

TEST(Densify, StatsMeanOverVisibleRenders) {
  DensifyStats s(3);
  GaussianGradients g(3);
  g.screen_grad_norm = {1.0, 2.0, 3.0};
  s.accumulate(g, {0, -1, 1});
  g.screen_grad_norm = {3.0, 2.0, 5.0};
  s.accumulate(g, {0, -1, -1});
  EXPECT_DOUBLE_EQ(s.mean(0), 2.0);
  EXPECT_DOUBLE_EQ(s.mean(1), 0.0);
  EXPECT_DOUBLE_EQ(s.mean(2), 3.0);
  EXPECT_THROW(s.accumulate(GaussianGradients(2), {0, 0}), ContractError);
}

TEST(Densify, RepeatedRoundsKeepOptimizerAligned) {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(0, 1), sc(-6, -1.5);
  GaussianSet set = testing::random_scene(30, gen);
  OptimizerState opt(set);
  DensifyStats stats(set.size());
  for (int round = 0; round < 10; ++round) {
    for (std::size_t i = 0; i < set.size(); ++i) {
      Gaussian g = set.at(i);
      g.log_scale = Vec3::Constant(sc(gen));
      g.opacity_logit = logit(0.001 + 0.05 * u(gen));
      set.set(i, g);
      stats.grad_sum[i] = 4e-4 * u(gen);
      stats.visible_count[i] = 1;
    }
    try {
      densify_and_prune(set, stats, DensifyConfig{}, &opt);
    } catch (const TrainingError&) {
      break;
    }
    ASSERT_EQ(opt.gaussian_rows(), set.size());
    ASSERT_EQ(stats.size(), set.size());
    for (const AdamGroup* grp : opt.all_groups())
      if (grp != &opt.mlp) EXPECT_EQ(grp->rows(), set.size()) << grp->name();
  }
}

}  // namespace
}  // namespace gs4d
