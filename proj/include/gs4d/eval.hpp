// Copyright 2026 The gs4d Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "gs4d/image.hpp"

namespace gs4d {

/// Reported in place of +inf for identical images.
inline constexpr double kPsnrCap = 99.0;

/// 10 log10(1 / MSE); +inf for identical images. Throws ParameterError on shape mismatch.
double psnr(const Image& a, const Image& b);
double mse(const Image& a, const Image& b);

struct EvalEntry {
  std::string name;  // path relative to the render directory
  std::optional<int> timestep;
  std::optional<int> view;
  double psnr = 0;  // may be +inf
  double ssim = 0;
  bool identical() const { return std::isinf(psnr); }
};

struct EvalAggregate {
  std::size_t count = 0;
  double mean_psnr = 0;  // capped
  double mean_ssim = 0;
};

struct EvalReport {
  std::vector<EvalEntry> entries;
  std::map<int, EvalAggregate> per_view;
  std::map<int, EvalAggregate> per_timestep;
  EvalAggregate overall;

  nlohmann::json to_json() const;
  std::string table() const;
};

/// Builds aggregates from entries (PSNR capped at kPsnrCap).
EvalReport summarize(std::vector<EvalEntry> entries);

/// Pairs every .png under `renders` with the same relative path under `truth`.
/// Timestep/view come from `tNNNN/viewVV.png`, `tNNNN.png` or `frame_NNNN.png` names.
/// Throws IoError when a ground-truth file is missing or no images are found.
EvalReport evaluate_directories(const std::filesystem::path& renders,
                                const std::filesystem::path& truth);

}  // namespace gs4d
