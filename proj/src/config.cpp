// Copyright 2026 The gs4d Authors
// SPDX-License-Identifier: Apache-2.0

#include "gs4d/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "toml.hpp"

#include "gs4d/error.hpp"
#include "gs4d/rng.hpp"

namespace gs4d {
namespace {

template <class C, class F>
void visit_fields(C& c, F&& f) {
  f("seed", c.seed);
  f("static_iterations", c.static_iterations);
  f("coarse_iterations", c.coarse_iterations);
  f("fine_iterations", c.fine_iterations);
  f("temporal_fraction", c.temporal_fraction);
  f("w_tv", c.w_tv);
  f("w_sds", c.w_sds);
  f("w_pseudo", c.w_pseudo);
  f("w_consistency", c.w_consistency);
  f("w_smooth", c.w_smooth);
  f("recon_l1", c.recon_l1);
  f("recon_dssim", c.recon_dssim);
  f("lr_position", c.lr_position);
  f("lr_position_final_factor", c.lr_position_final_factor);
  f("lr_rotation", c.lr_rotation);
  f("lr_scale", c.lr_scale);
  f("lr_opacity", c.lr_opacity);
  f("lr_color", c.lr_color);
  f("lr_planes", c.lr_planes);
  f("lr_mlp", c.lr_mlp);
  f("adam_beta1", c.adam_beta1);
  f("adam_beta2", c.adam_beta2);
  f("adam_eps", c.adam_eps);
  f("densify_enabled", c.densify_enabled);
  f("densify_interval", c.densify_interval);
  f("densify_grad_threshold", c.densify_grad_threshold);
  f("clone_scale_threshold", c.clone_scale_threshold);
  f("split_factor", c.split_factor);
  f("prune_opacity_threshold", c.prune_opacity_threshold);
  f("max_gaussians", c.max_gaussians);
  f("render_width", c.render_width);
  f("render_height", c.render_height);
  f("background", c.background);
  f("sds_azimuth_min", c.sds_azimuth_min);
  f("sds_azimuth_max", c.sds_azimuth_max);
  f("sds_elevation_min", c.sds_elevation_min);
  f("sds_elevation_max", c.sds_elevation_max);
  f("sds_t_min", c.sds_t_min);
  f("sds_t_max", c.sds_t_max);
  f("sds_schedule_steps", c.sds_schedule_steps);
  f("guidance_scale", c.guidance_scale);
  f("subsequence_length", c.subsequence_length);
  f("frame_rates", c.frame_rates);
  f("temporal_upsample", c.temporal_upsample);
  f("num_init_gaussians", c.num_init_gaussians);
  f("init_ply", c.init_ply);
  f("field_levels", c.field_levels);
  f("field_base_resolution", c.field_base_resolution);
  f("field_time_resolution", c.field_time_resolution);
  f("field_channels", c.field_channels);
  f("field_hidden", c.field_hidden);
  f("checkpoint_interval", c.checkpoint_interval);
  f("prior", c.prior);
  f("prior_endpoint", c.prior_endpoint);
  f("oracle_gain", c.oracle_gain);
}

template <class T>
void write_field(nlohmann::json& j, const char* key, const T& v) {
  j[key] = v;
}
void write_field(nlohmann::json& j, const char* key, const std::optional<double>& v) {
  if (v)
    j[key] = *v;
  else
    j[key] = nullptr;
}

template <class T>
void read_field(const nlohmann::json& j, const char* key, T& v) {
  v = j.get<T>();
  (void)key;
}
void read_field(const nlohmann::json& j, const char*, std::optional<double>& v) {
  if (j.is_null())
    v.reset();
  else
    v = j.get<double>();
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ParameterError("config: " + what);
}

}  // namespace

void TrainConfig::validate() const {
  require(static_iterations >= 1 && coarse_iterations >= 1 && fine_iterations >= 1,
          "stage iteration counts must be >= 1");
  require(temporal_fraction >= 0 && temporal_fraction <= 1, "temporal_fraction must be in [0,1]");
  loss_weights().validate();
  require(recon_l1 >= 0 && recon_dssim >= 0, "recon weights must be >= 0");
  for (double lr : {lr_position, lr_rotation, lr_scale, lr_opacity, lr_color, lr_planes, lr_mlp})
    require(std::isfinite(lr) && lr >= 0, "learning rates must be finite and >= 0");
  require(lr_position_final_factor > 0, "lr_position_final_factor must be > 0");
  require(adam_beta1 >= 0 && adam_beta1 < 1 && adam_beta2 >= 0 && adam_beta2 < 1,
          "adam betas must be in [0,1)");
  require(adam_eps > 0, "adam_eps must be > 0");
  require(densify_interval >= 1, "densify_interval must be >= 1");
  require(densify_grad_threshold > 0 && prune_opacity_threshold > 0 && clone_scale_threshold > 0,
          "thresholds must be > 0");
  require(split_factor > 1, "split_factor must be > 1");
  require(render_width >= 0 && render_height >= 0 && (render_width == 0) == (render_height == 0),
          "render_width and render_height must both be 0 or both positive");
  require(background.size() == 3, "background must have 3 components");
  require(sds_azimuth_min <= sds_azimuth_max && sds_elevation_min <= sds_elevation_max,
          "SDS pose ranges must be ordered");
  require(sds_schedule_steps >= 1 && sds_t_min >= 1 && sds_t_min <= sds_t_max &&
              sds_t_max < sds_schedule_steps,
          "SDS noise range must satisfy 1 <= t_min <= t_max < steps");
  require(subsequence_length >= 1, "subsequence_length must be >= 1");
  require(!frame_rates.empty(), "frame_rates must be non-empty");
  for (int r : frame_rates) require(r >= 1, "frame rates must be >= 1");
  require(temporal_upsample >= 1, "temporal_upsample must be >= 1");
  require(num_init_gaussians >= 1, "num_init_gaussians must be >= 1");
  require(field_levels >= 1 && field_base_resolution >= 2 && field_channels >= 1 &&
              field_hidden >= 1,
          "field dimensions must be positive");
  require(field_time_resolution == 0 || field_time_resolution == -1 || field_time_resolution >= 2,
          "field_time_resolution must be 0, -1 or >= 2");
  require(checkpoint_interval >= 1, "checkpoint_interval must be >= 1");
  require(prior == "none" || prior == "oracle" || prior == "remote",
          "prior must be none, oracle or remote");
  require(prior != "remote" || !prior_endpoint.empty(), "remote prior needs prior_endpoint");
}

LossWeights TrainConfig::loss_weights() const {
  return {w_tv, w_sds, w_pseudo, w_consistency, w_smooth};
}

LearningRates TrainConfig::learning_rates() const {
  return {lr_position, lr_position_final_factor, lr_rotation, lr_scale,
          lr_opacity, lr_color, lr_planes, lr_mlp};
}

AdamConfig TrainConfig::adam() const { return {adam_beta1, adam_beta2, adam_eps}; }

DensifyConfig TrainConfig::densify() const {
  DensifyConfig d;
  d.enabled = densify_enabled;
  d.interval = densify_interval;
  d.grad_threshold = densify_grad_threshold;
  d.clone_scale_threshold = clone_scale_threshold;
  d.split_factor = split_factor;
  d.prune_opacity = prune_opacity_threshold;
  d.max_gaussians = max_gaussians;
  return d;
}

NoiseSchedule TrainConfig::noise_schedule() const {
  NoiseSchedule s;
  s.steps = sds_schedule_steps;
  s.t_min = sds_t_min;
  s.t_max = sds_t_max;
  return s;
}

FieldConfig TrainConfig::field_config(int num_anchors) const {
  FieldConfig f;
  f.num_levels = field_levels;
  f.base_resolution = field_base_resolution;
  f.time_resolution = field_time_resolution == 0    ? default_time_resolution(num_anchors)
                      : field_time_resolution == -1 ? 0
                                                    : field_time_resolution;
  f.channels = field_channels;
  f.hidden_width = field_hidden;
  f.seed = mix_seed(seed, 0xf1e1d);
  return f;
}

Vec3 TrainConfig::background_color() const {
  return Vec3(background.at(0), background.at(1), background.at(2));
}

nlohmann::json config_to_json(const TrainConfig& cfg) {
  nlohmann::json j = nlohmann::json::object();
  visit_fields(cfg, [&](const char* key, const auto& v) { write_field(j, key, v); });
  return j;
}

TrainConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParameterError("config: document must be an object");
  const nlohmann::json defaults = config_to_json(TrainConfig{});
  for (const auto& [key, value] : j.items())
    if (!defaults.contains(key)) throw ParameterError("config: unknown key '" + key + "'");
  TrainConfig cfg;
  visit_fields(cfg, [&](const char* key, auto& v) {
    if (!j.contains(key)) return;
    try {
      read_field(j.at(key), key, v);
    } catch (const nlohmann::json::exception& e) {
      throw ParameterError(std::string("config: bad value for '") + key + "': " + e.what());
    }
  });
  cfg.validate();
  return cfg;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  const std::string ext = path.extension().string();
  nlohmann::json j;
  if (ext == ".toml") {
    try {
      const toml::table tbl = toml::parse(in, path.string());
      std::ostringstream os;
      os << toml::json_formatter{tbl};
      j = nlohmann::json::parse(os.str());
    } catch (const toml::parse_error& e) {
      throw FormatError("config " + path.string() + ": " + std::string(e.description()));
    }
  } else {
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("config " + path.string() + ": " + e.what());
    }
  }
  return config_from_json(j);
}

}  // namespace gs4d
