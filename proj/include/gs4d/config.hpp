// Copyright 2026 The gs4d Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "gs4d/densify.hpp"
#include "gs4d/hexplane.hpp"
#include "gs4d/losses.hpp"
#include "gs4d/optimizer.hpp"

namespace gs4d {

/// Flat training configuration. Field names are the config-file keys.
struct TrainConfig {
  std::uint64_t seed = 0;

  int static_iterations = 1000;
  int coarse_iterations = 1000;
  int fine_iterations = 3000;
  /// Probability that a fine iteration is a temporal-consistency iteration.
  double temporal_fraction = 0.10;

  double w_tv = 1e-3;
  double w_sds = 0.01;
  double w_pseudo = 1.0;
  double w_consistency = 1.0;
  double w_smooth = 1.0;
  double recon_l1 = 0.8;
  double recon_dssim = 0.2;

  double lr_position = 1.6e-4;
  double lr_position_final_factor = 0.01;
  double lr_rotation = 1e-3;
  double lr_scale = 5e-3;
  double lr_opacity = 5e-2;
  double lr_color = 2.5e-3;
  double lr_planes = 1.6e-3;
  double lr_mlp = 1.6e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-15;

  bool densify_enabled = true;
  int densify_interval = 100;
  double densify_grad_threshold = 2e-4;
  double clone_scale_threshold = 0.01;
  double split_factor = 1.6;
  double prune_opacity_threshold = 5e-3;
  std::uint64_t max_gaussians = 0;

  /// 0 keeps the dataset resolution.
  int render_width = 0;
  int render_height = 0;
  std::vector<double> background = {1.0, 1.0, 1.0};

  double sds_azimuth_min = 0;
  double sds_azimuth_max = 360;
  double sds_elevation_min = -30;
  double sds_elevation_max = 30;
  int sds_t_min = 20;
  int sds_t_max = 980;
  int sds_schedule_steps = 1000;
  std::optional<double> guidance_scale;

  int subsequence_length = 4;
  std::vector<int> frame_rates = {1, 2, 4};
  /// Temporal iterations sample on a timeline with this many steps per anchor gap.
  int temporal_upsample = 4;

  std::uint64_t num_init_gaussians = 5000;
  std::string init_ply;

  int field_levels = 2;
  int field_base_resolution = 64;
  /// 0 selects max(num_anchors, 8); -1 makes space-time planes square.
  int field_time_resolution = 0;
  int field_channels = 16;
  int field_hidden = 64;

  int checkpoint_interval = 500;

  /// "none", "oracle" (in-process only) or "remote".
  std::string prior = "none";
  std::string prior_endpoint;
  double oracle_gain = 1.0;

  void validate() const;

  LossWeights loss_weights() const;
  LearningRates learning_rates() const;
  AdamConfig adam() const;
  DensifyConfig densify() const;
  NoiseSchedule noise_schedule() const;
  FieldConfig field_config(int num_anchors) const;
  Vec3 background_color() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

nlohmann::json config_to_json(const TrainConfig& cfg);
/// Overlays the keys of `j` on the defaults; unknown keys are a ParameterError.
TrainConfig config_from_json(const nlohmann::json& j);
/// Reads a .json or .toml file (chosen by extension).
TrainConfig load_config(const std::filesystem::path& path);

}  // namespace gs4d
