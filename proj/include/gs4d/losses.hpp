// Copyright 2026 The gs4d Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "gs4d/hexplane.hpp"
#include "gs4d/image.hpp"
#include "gs4d/prior.hpp"

namespace gs4d {

struct LossWeights {
  double tv = 1e-3;           // w2
  double sds = 0.01;          // w3
  double pseudo = 1.0;        // w4
  double consistency = 1.0;   // w5
  double smooth = 1.0;        // multiplier on the smoothness term inside consistency

  void validate() const;
};

/// Photometric blend used for reconstruction and pseudo-label terms.
struct ReconMetric {
  double l1 = 0.8;
  double dssim = 0.2;

  static ReconMetric pure_l1() { return {1.0, 0.0}; }
};

// Every gradient argument below is optional (empty span / nullptr) and is
// accumulated as `scale * dL/d(input)`.

/// Neighbor-difference penalty on one plane, normalised by channels * rows * cols.
double tv_loss(const FeaturePlane& plane, std::span<double> grad = {}, double scale = 1.0);
/// Sum of tv_loss over all planes of all levels.
double tv_loss(const HexPlaneField& field, FieldGradients* grad = nullptr, double scale = 1.0);

/// Second difference along the column (time) axis of one plane, same normalisation.
/// Returns 0 when the plane has fewer than 3 columns.
double smooth_loss(const FeaturePlane& plane, std::span<double> grad = {}, double scale = 1.0);
/// Sum over the three space-time planes of every level. Warns once on stderr if
/// the time resolution is below 3.
double smooth_loss(const HexPlaneField& field, FieldGradients* grad = nullptr,
                   double scale = 1.0);

/// metric.l1 * masked mean |render - reference| + metric.dssim * (1 - masked SSIM).
/// The mask (H x W x 1) weights pixels; without one every pixel counts.
double recon_loss(const Image& render, const Image& reference, const Image* mask = nullptr,
                  const ReconMetric& metric = {}, Image* grad = nullptr, double scale = 1.0);

/// Mean over views of recon_loss. `masks` is empty or one (possibly null) mask per view;
/// `grads` is empty or one image per view.
double pseudo_loss(std::span<const Image> renders, std::span<const Image> labels,
                   std::span<const Image* const> masks = {}, const ReconMetric& metric = {},
                   std::span<Image> grads = {}, double scale = 1.0);

/// Cosine alpha-bar schedule over `steps` discrete noise levels.
struct NoiseSchedule {
  int steps = 1000;
  int t_min = 20;
  int t_max = 980;
  double offset = 0.008;

  double alpha_bar(int t) const;
};

struct SdsResult {
  /// w(t) * (eps_hat - eps), shaped like the render.
  Image gradient;
  /// 1/2 * mean(gradient^2), the value reported for the SDS term.
  double magnitude = 0;
  int noise_level = 0;
};

/// Noises `render` with eps drawn from `seed`, queries the prior and returns the
/// SDS gradient. The condition's test channel (clean render, alpha_bar) is filled
/// in here. Prior failures propagate to the caller.
SdsResult sds_inject(Prior& prior, const Image& render, PriorCondition condition, int noise_level,
                     std::uint64_t seed, const NoiseSchedule& schedule = {},
                     double weight = 1.0);

/// Standard normal noise image drawn from the seed (the eps of sds_inject).
Image sds_noise(int width, int height, int channels, std::uint64_t seed);

struct LossParts {
  double recon = 0;
  double pseudo = 0;
  double tv = 0;
  double smooth = 0;
  double sds = 0;
};

struct LossReport {
  std::map<std::string, double> terms;  // raw and weighted values
  double consistency = 0;
  double total = 0;

  nlohmann::json to_json() const;
};

/// consistency = smooth + w2 * tv + w3 * sds; total = recon + w4 * pseudo + w5 * consistency.
/// Throws NumericalError naming the first non-finite part.
LossReport total_loss(const LossParts& parts, const LossWeights& weights);

}  // namespace gs4d
