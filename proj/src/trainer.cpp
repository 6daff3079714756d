// Copyright 2026 The gs4d Authors
// SPDX-License-Identifier: Apache-2.0

#include "gs4d/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>

#include "gs4d/error.hpp"
#include "gs4d/losses.hpp"
#include "gs4d/ply.hpp"
#include "gs4d/rasterizer.hpp"

namespace gs4d {

namespace {
constexpr std::uint64_t kStageStream[] = {0x51a71c, 0xc0a25e, 0xf12e};
}

Subsequence sample_subsequence(int num_timesteps, const TrainConfig& cfg, CounterRng& rng) {
  if (num_timesteps < 2) throw ParameterError("sample_subsequence: need T >= 2");
  if (cfg.frame_rates.empty()) throw ParameterError("sample_subsequence: no frame rates");
  const int last = num_timesteps - 1;
  int length = std::max(1, cfg.subsequence_length);
  std::vector<int> feasible;
  for (int r : cfg.frame_rates)
    if (r >= 1 && (length - 1) * r <= last) feasible.push_back(r);
  if (feasible.empty()) {
    const int r = *std::min_element(cfg.frame_rates.begin(), cfg.frame_rates.end());
    length = last / r + 1;
    feasible.push_back(r);
  }
  Subsequence out;
  out.rate = feasible[rng.below(feasible.size())];
  const int max_start = last - (length - 1) * out.rate;
  const int start = static_cast<int>(rng.below(static_cast<std::uint64_t>(max_start) + 1));
  for (int k = 0; k < length; ++k) {
    out.indices.push_back(start + k * out.rate);
    out.times.push_back(static_cast<double>(out.indices.back()) / last);
  }
  return out;
}

GaussianSet initial_scene(const TrainConfig& cfg) {
  if (!cfg.init_ply.empty()) {
    GaussianSet set = init_from_ply(cfg.init_ply);
    if (set.empty()) throw ParameterError("initial scene: PLY has no vertices");
    normalize_to_cube(set, 1.0);
    set.set_creation_seed(cfg.seed);
    return set;
  }
  return init_unit_sphere(cfg.num_init_gaussians, cfg.seed);
}

std::vector<double> state_positions(const TrainState& state, double t) {
  if (state.has_field) return deform(state.field, state.scene, t);
  return state.scene.position_vector();
}

Image render_state(const TrainState& state, const Camera& cam, double t, const Vec3& background) {
  const auto pos = state_positions(state, t);
  return render(state.scene, pos, cam, background).output.color;
}

OrbitPose camera_orbit(const Camera& cam) {
  const Vec3 c = cam.center();
  OrbitPose p;
  p.radius = c.norm();
  if (p.radius <= 0) return p;
  p.elevation_deg = std::asin(std::clamp(c.z() / p.radius, -1.0, 1.0)) * 180 / std::numbers::pi;
  p.azimuth_deg = std::atan2(c.x(), -c.y()) * 180 / std::numbers::pi;
  return p;
}

// ---------------------------------------------------------------------------

/// Gradient accumulation for one optimizer step.
struct Trainer::Step {
  struct TimeGroup {
    double t;
    std::vector<double> positions;
    std::vector<double> d_deformed;
  };

  TrainState& s;
  Vec3 background;
  GaussianGradients g;
  FieldGradients f;
  std::vector<TimeGroup> groups;
  std::size_t renders = 0;

  Step(TrainState& state, const Vec3& bg) : s(state), background(bg), g(state.scene.size()) {
    if (s.has_field) f = FieldGradients(s.field);
  }

  TimeGroup& group(double t) {
    for (auto& gr : groups)
      if (gr.t == t) return gr;
    groups.push_back({t, state_positions(s, t), std::vector<double>(3 * s.scene.size(), 0.0)});
    return groups.back();
  }

  RenderResult render_at(const Camera& cam, double t) {
    ++renders;
    return render(s.scene, group(t).positions, cam, background);
  }

  /// Back-propagates d_color through the render made at time t.
  void backward(const RenderResult& rr, double t, const Image& d_color, DensifyStats* stats) {
    TimeGroup& gr = group(t);
    GaussianGradients gg = render_backward(rr.context, s.scene, gr.positions, d_color);
    for (std::size_t i = 0; i < gg.position.size(); ++i) gr.d_deformed[i] += gg.position[i];
    std::fill(gg.position.begin(), gg.position.end(), 0.0);
    g.add(gg);
    if (stats) stats->accumulate(gg, rr.context.slot_of_gaussian());
  }

  void finish() {
    for (auto& gr : groups) {
      if (s.has_field) {
        deform_backward(s.field, s.scene, gr.t, gr.d_deformed, f, g.position);
      } else {
        for (std::size_t i = 0; i < gr.d_deformed.size(); ++i) g.position[i] += gr.d_deformed[i];
      }
    }
  }
};

Trainer::Trainer(TrainConfig cfg, const AnchorDataset& dataset, Prior* prior)
    : cfg_(std::move(cfg)), prior_(prior) {
  cfg_.validate();
  dataset.validate();
  ds_ = (cfg_.render_width > 0 && (cfg_.render_width != dataset.width() ||
                                   cfg_.render_height != dataset.height()))
            ? resample_dataset(dataset, cfg_.render_width, cfg_.render_height)
            : dataset;
  front_orbit_ = camera_orbit(ds_.front_camera());
}

std::int64_t Trainer::stage_length(Stage s) const {
  switch (s) {
    case Stage::Static: return cfg_.static_iterations;
    case Stage::Coarse: return cfg_.coarse_iterations;
    case Stage::Fine: return cfg_.fine_iterations;
  }
  return 0;
}

TrainState Trainer::begin_static(GaussianSet init) const {
  if (init.empty()) throw ParameterError("train_static: empty initial scene");
  TrainState s;
  s.stage = Stage::Static;
  s.iteration = 0;
  s.scene = std::move(init);
  s.optimizer = OptimizerState(s.scene);
  s.rng = CounterRng(cfg_.seed, kStageStream[0]);
  s.densify_stats.reset(s.scene.size());
  s.front_camera = ds_.front_camera();
  s.radius = ds_.radius;
  return s;
}

void Trainer::begin_coarse(TrainState& s) const {
  if (s.stage != Stage::Static || s.iteration < cfg_.static_iterations)
    throw TrainingError("coarse stage needs a completed static stage");
  s.stage = Stage::Coarse;
  s.iteration = 0;
  s.field = HexPlaneField(cfg_.field_config(ds_.num_anchors));
  s.has_field = true;
  s.optimizer.attach_field(s.field);
  s.rng = CounterRng(cfg_.seed, kStageStream[1]);
  s.densify_stats.reset(0);
  s.counters = {};
}

void Trainer::begin_fine(TrainState& s) const {
  if (s.stage != Stage::Coarse || s.iteration < cfg_.coarse_iterations || !s.has_field)
    throw TrainingError("fine stage needs a completed coarse stage");
  s.stage = Stage::Fine;
  s.iteration = 0;
  s.rng = CounterRng(cfg_.seed, kStageStream[2]);
  s.counters = {};
}

void Trainer::run(TrainState& s, const StageHooks& hooks) {
  const std::int64_t n = stage_length(s.stage);
  const std::int64_t stop = hooks.stop_at >= 0 ? std::min(hooks.stop_at, n) : n;
  while (s.iteration < stop) {
    nlohmann::json line;
    switch (s.stage) {
      case Stage::Static: line = static_iteration(s); break;
      case Stage::Coarse: line = coarse_iteration(s); break;
      case Stage::Fine: line = fine_iteration(s); break;
    }
    ++s.iteration;
    line["iter"] = s.iteration;
    line["stage"] = stage_name(s.stage);
    line["gaussian_count"] = s.scene.size();
    if (hooks.log) hooks.log(line);
    if (hooks.checkpoint && (s.iteration % cfg_.checkpoint_interval == 0 || s.iteration == n))
      hooks.checkpoint(s);
  }
}

nlohmann::json Trainer::static_iteration(TrainState& s) {
  Step step(s, cfg_.background_color());
  const int views = ds_.num_views();
  double pseudo = 0;
  for (int v = 0; v < views; ++v) {
    RenderResult rr = step.render_at(ds_.cameras[v], 0.0);
    Image d(rr.output.color.width, rr.output.color.height, 3);
    const Image* mask = ds_.has_masks() ? &ds_.masks[0][v] : nullptr;
    pseudo += recon_loss(rr.output.color, ds_.labels[0][v], mask, ReconMetric::pure_l1(), &d,
                         1.0 / views) /
              views;
    step.backward(rr, 0.0, d, &s.densify_stats);
  }
  step.finish();
  const LearningRates lr = cfg_.learning_rates();
  s.optimizer.step_gaussians(s.scene, step.g, lr, lr.position_at(s.iteration, cfg_.static_iterations),
                             cfg_.adam());

  nlohmann::json line = {{"iteration_type", "static"}};
  const DensifyConfig dc = cfg_.densify();
  const std::int64_t done = s.iteration + 1;
  if (dc.enabled && done % dc.interval == 0 && done < cfg_.static_iterations) {
    const DensifyResult r = densify_and_prune(s.scene, s.densify_stats, dc, &s.optimizer);
    line["densify"] = {{"cloned", r.cloned}, {"split", r.split}, {"pruned", r.pruned}};
  }
  LossParts parts;
  parts.pseudo = pseudo;
  LossWeights w{};
  w.pseudo = 1.0;
  const LossReport rep = total_loss(parts, w);
  line["loss"] = rep.to_json();
  return line;
}

nlohmann::json Trainer::coarse_iteration(TrainState& s) {
  Step step(s, cfg_.background_color());
  const LossWeights w = cfg_.loss_weights();
  const ReconMetric metric{cfg_.recon_l1, cfg_.recon_dssim};
  const int k = static_cast<int>(s.rng.below(ds_.num_anchors));
  const int v = static_cast<int>(s.rng.below(ds_.num_views()));
  const double t = ds_.anchor_time(k);

  LossParts parts;
  if (w.pseudo > 0) {
    RenderResult rr = step.render_at(ds_.cameras[v], t);
    Image d(rr.output.color.width, rr.output.color.height, 3);
    parts.pseudo = recon_loss(rr.output.color, ds_.labels[k][v],
                              ds_.has_masks() ? &ds_.masks[k][v] : nullptr, metric, &d, w.pseudo);
    step.backward(rr, t, d, nullptr);
  }
  parts.tv = tv_loss(s.field, &step.f, w.consistency * w.tv);
  parts.smooth = smooth_loss(s.field, &step.f, w.consistency * w.smooth);
  step.finish();

  const LearningRates lr = cfg_.learning_rates();
  s.optimizer.step_gaussians(s.scene, step.g, lr, lr.position_at(s.iteration, cfg_.coarse_iterations),
                             cfg_.adam());
  s.optimizer.step_field(s.field, step.f, lr, cfg_.adam());
  return {{"iteration_type", "pseudo"}, {"anchor", k}, {"view", v},
          {"loss", total_loss(parts, w).to_json()}};
}

nlohmann::json Trainer::fine_iteration(TrainState& s) {
  Step step(s, cfg_.background_color());
  const LossWeights w = cfg_.loss_weights();
  const ReconMetric metric{cfg_.recon_l1, cfg_.recon_dssim};
  const Camera& front = ds_.front_camera();
  const int T = ds_.num_anchors;
  LossParts parts;
  nlohmann::json line;

  if (s.rng.uniform() < cfg_.temporal_fraction) {
    ++s.counters.temporal_iterations;
    const int up = cfg_.temporal_upsample;
    const Subsequence sub = sample_subsequence((T - 1) * up + 1, cfg_, s.rng);
    const double inv = 1.0 / static_cast<double>(sub.indices.size());
    std::vector<int> anchors;
    for (std::size_t j = 0; j < sub.indices.size(); ++j) {
      if (sub.indices[j] % up != 0) continue;  // no image supervision between anchors
      const int a = sub.indices[j] / up;
      anchors.push_back(a);
      RenderResult rr = step.render_at(front, sub.times[j]);
      Image d(rr.output.color.width, rr.output.color.height, 3);
      parts.recon += inv * recon_loss(rr.output.color, ds_.reference[a], nullptr, metric, &d, inv);
      step.backward(rr, sub.times[j], d, nullptr);
    }
    line = {{"iteration_type", "temporal"}, {"rate", sub.rate}, {"times", sub.times},
            {"anchors", anchors}};
  } else {
    ++s.counters.sds_iterations;
    const int k = static_cast<int>(s.rng.below(T));
    const double t = ds_.anchor_time(k);
    OrbitPose pose;
    pose.azimuth_deg = s.rng.uniform(cfg_.sds_azimuth_min, cfg_.sds_azimuth_max);
    pose.elevation_deg = s.rng.uniform(cfg_.sds_elevation_min, cfg_.sds_elevation_max);
    pose.radius = ds_.radius;
    const NoiseSchedule sched = cfg_.noise_schedule();
    const int noise_level =
        sched.t_min + static_cast<int>(s.rng.below(static_cast<std::uint64_t>(sched.t_max - sched.t_min + 1)));
    const std::uint64_t noise_seed = s.rng.next_u64();
    const int v = static_cast<int>(s.rng.below(ds_.num_views()));
    line = {{"iteration_type", "sds"}, {"anchor", k}, {"view", v},
            {"azimuth", pose.azimuth_deg}, {"elevation", pose.elevation_deg}};

    if (w.sds > 0 && prior_) {
      const Camera cam = orbit_to_camera(pose, front.intrinsics());
      RenderResult rr = step.render_at(cam, t);
      PriorCondition cond;
      cond.reference_image = &ds_.reference[k];
      cond.delta_azimuth_deg = pose.azimuth_deg - front_orbit_.azimuth_deg;
      cond.delta_elevation_deg = pose.elevation_deg - front_orbit_.elevation_deg;
      cond.delta_radius = pose.radius - front_orbit_.radius;
      cond.camera = &cam;
      cond.time = t;
      try {
        ++s.counters.prior_calls;
        SdsResult sds = sds_inject(*prior_, rr.output.color, cond, noise_level, noise_seed, sched);
        const double scale = w.consistency * w.sds / static_cast<double>(sds.gradient.size());
        for (double& g : sds.gradient.data) g *= scale;
        parts.sds = sds.magnitude;
        step.backward(rr, t, sds.gradient, nullptr);
        line["noise_level"] = noise_level;
      } catch (const PriorUnavailableError& e) {
        ++s.counters.sds_skipped;
        line["sds_skipped"] = e.what();
      } catch (const ProtocolError& e) {
        ++s.counters.sds_skipped;
        line["sds_skipped"] = e.what();
      }
    }
    {
      RenderResult rr = step.render_at(front, t);
      Image d(rr.output.color.width, rr.output.color.height, 3);
      parts.recon = recon_loss(rr.output.color, ds_.reference[k], nullptr, metric, &d, 1.0);
      step.backward(rr, t, d, nullptr);
    }
    if (w.pseudo > 0) {
      RenderResult rr = step.render_at(ds_.cameras[v], t);
      Image d(rr.output.color.width, rr.output.color.height, 3);
      parts.pseudo = recon_loss(rr.output.color, ds_.labels[k][v],
                                ds_.has_masks() ? &ds_.masks[k][v] : nullptr, metric, &d, w.pseudo);
      step.backward(rr, t, d, nullptr);
    }
  }
  parts.tv = tv_loss(s.field, &step.f, w.consistency * w.tv);
  parts.smooth = smooth_loss(s.field, &step.f, w.consistency * w.smooth);
  step.finish();

  const LearningRates lr = cfg_.learning_rates();
  s.optimizer.step_gaussians(s.scene, step.g, lr, lr.position_at(s.iteration, cfg_.fine_iterations),
                             cfg_.adam());
  s.optimizer.step_field(s.field, step.f, lr, cfg_.adam());
  line["loss"] = total_loss(parts, w).to_json();
  return line;
}

// ---------------------------------------------------------------------------

TrainState train_static(const TrainConfig& cfg, const AnchorDataset& ds, GaussianSet init,
                        const StageHooks& hooks) {
  Trainer tr(cfg, ds);
  TrainState s = tr.begin_static(std::move(init));
  tr.run(s, hooks);
  return s;
}

void train_coarse(const TrainConfig& cfg, const AnchorDataset& ds, TrainState& state,
                  const StageHooks& hooks) {
  Trainer tr(cfg, ds);
  tr.begin_coarse(state);
  tr.run(state, hooks);
}

void train_fine(const TrainConfig& cfg, const AnchorDataset& ds, TrainState& state, Prior* prior,
                const StageHooks& hooks) {
  Trainer tr(cfg, ds, prior);
  tr.begin_fine(state);
  tr.run(state, hooks);
}

}  // namespace gs4d
