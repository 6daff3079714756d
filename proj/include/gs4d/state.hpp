// Copyright 2026 The gs4d Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

#include "gs4d/camera.hpp"
#include "gs4d/densify.hpp"
#include "gs4d/hexplane.hpp"
#include "gs4d/optimizer.hpp"
#include "gs4d/rng.hpp"
#include "gs4d/scene.hpp"

namespace gs4d {

enum class Stage { Static, Coarse, Fine };

const char* stage_name(Stage s);
/// Throws FormatError for unknown names.
Stage stage_from_name(const std::string& name);

struct StageCounters {
  std::int64_t temporal_iterations = 0;
  std::int64_t sds_iterations = 0;
  std::int64_t sds_skipped = 0;
  std::int64_t prior_calls = 0;

  friend bool operator==(const StageCounters&, const StageCounters&) = default;
};

/// Everything needed to continue training from an iteration boundary.
struct TrainState {
  Stage stage = Stage::Static;
  /// Completed iterations of `stage`.
  std::int64_t iteration = 0;
  GaussianSet scene;
  bool has_field = false;
  HexPlaneField field;
  OptimizerState optimizer;
  CounterRng rng;
  DensifyStats densify_stats;
  StageCounters counters;
  /// Front-view camera of the dataset; render defaults derive from it.
  Camera front_camera;
  double radius = 1;

  friend bool operator==(const TrainState&, const TrainState&) = default;
};

}  // namespace gs4d
