// Copyright 2026 The gs4d Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "json.hpp"

#include "gs4d/config.hpp"
#include "gs4d/dataset.hpp"
#include "gs4d/prior.hpp"
#include "gs4d/state.hpp"

namespace gs4d {

struct StageHooks {
  /// One JSON object per iteration.
  std::function<void(const nlohmann::json&)> log;
  /// Called every checkpoint_interval iterations and at stage end.
  std::function<void(const TrainState&)> checkpoint;
  /// When >= 0, run() returns once this many iterations of the stage are done.
  std::int64_t stop_at = -1;
};

struct Subsequence {
  int rate = 1;
  std::vector<int> indices;   // strictly increasing frame indices
  std::vector<double> times;  // indices / (T - 1)
};

/// Random frame rate from cfg.frame_rates (feasible ones only) and random start so
/// that the last of cfg.subsequence_length frames fits in [0, T-1]. The length is
/// reduced when no rate fits. Throws ParameterError for T < 2.
Subsequence sample_subsequence(int num_timesteps, const TrainConfig& cfg, CounterRng& rng);

/// Random unit-sphere init, or the configured PLY rescaled into [-1,1]^3.
GaussianSet initial_scene(const TrainConfig& cfg);

/// Deformed positions of the state's scene at time t (canonical before coarse).
std::vector<double> state_positions(const TrainState& state, double t);
/// Renders the state at time t.
Image render_state(const TrainState& state, const Camera& cam, double t, const Vec3& background);

/// Azimuth, elevation (degrees) and distance of a camera centre around the origin,
/// in the orbit_to_camera convention.
OrbitPose camera_orbit(const Camera& cam);

class Trainer {
 public:
  /// The dataset is copied (and resampled when the config sets a render size).
  Trainer(TrainConfig cfg, const AnchorDataset& dataset, Prior* prior = nullptr);

  const TrainConfig& config() const { return cfg_; }
  const AnchorDataset& dataset() const { return ds_; }

  TrainState begin_static(GaussianSet init) const;
  /// Requires a completed static stage; adds a fresh deformation field.
  void begin_coarse(TrainState& state) const;
  /// Requires a completed coarse stage.
  void begin_fine(TrainState& state) const;

  std::int64_t stage_length(Stage s) const;
  bool stage_complete(const TrainState& state) const {
    return state.iteration >= stage_length(state.stage);
  }

  /// Continues the state's current stage until it completes (or hooks.stop_at).
  void run(TrainState& state, const StageHooks& hooks = {});

 private:
  struct Step;
  nlohmann::json static_iteration(TrainState& s);
  nlohmann::json coarse_iteration(TrainState& s);
  nlohmann::json fine_iteration(TrainState& s);

  TrainConfig cfg_;
  AnchorDataset ds_;
  Prior* prior_;
  OrbitPose front_orbit_;
};

/// Stage wrappers: each runs one whole stage.
TrainState train_static(const TrainConfig& cfg, const AnchorDataset& ds, GaussianSet init,
                        const StageHooks& hooks = {});
void train_coarse(const TrainConfig& cfg, const AnchorDataset& ds, TrainState& state,
                  const StageHooks& hooks = {});
void train_fine(const TrainConfig& cfg, const AnchorDataset& ds, TrainState& state, Prior* prior,
                const StageHooks& hooks = {});

}  // namespace gs4d
