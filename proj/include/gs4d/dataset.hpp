// Copyright 2026 The gs4d Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gs4d/camera.hpp"
#include "gs4d/image.hpp"

namespace gs4d {

/// Multi-view pseudo labels per anchor timestep plus the front-view reference video.
///
/// On disk:
///   root/config.json                 {"num_anchors", "views": [camera...], "radius", "front_view_index"}
///   root/frames/tTTTT/viewVV.png     pseudo labels
///   root/input/tTTTT.png             reference frames
///   root/masks/tTTTT/viewVV.png      optional alpha masks
struct AnchorDataset {
  int num_anchors = 0;
  std::vector<Camera> cameras;  // one per view, shared across timesteps
  double radius = 1;
  int front_view_index = 0;
  std::vector<std::vector<Image>> labels;  // [anchor][view]
  std::vector<Image> reference;            // [anchor]
  std::vector<std::vector<Image>> masks;   // empty, or [anchor][view] (H x W x 1)

  int num_views() const { return static_cast<int>(cameras.size()); }
  int width() const { return reference.empty() ? 0 : reference[0].width; }
  int height() const { return reference.empty() ? 0 : reference[0].height; }
  bool has_masks() const { return !masks.empty(); }
  const Camera& front_camera() const { return cameras.at(front_view_index); }
  /// Normalized time of an anchor: index / (T - 1).
  double anchor_time(int anchor) const;

  /// Throws ParameterError/FormatError unless counts and dimensions agree, T >= 2, V >= 1.
  void validate() const;
};

std::filesystem::path label_path(const std::filesystem::path& root, int anchor, int view);
std::filesystem::path mask_path(const std::filesystem::path& root, int anchor, int view);
std::filesystem::path reference_path(const std::filesystem::path& root, int anchor);

/// Reads the documented layout; file names come from the pattern, never from
/// directory listing. Missing files raise IoError naming the path.
AnchorDataset load_dataset(const std::filesystem::path& root);
/// Writes the layout above (8-bit PNG).
void save_dataset(const AnchorDataset& ds, const std::filesystem::path& root);

/// Rescales cameras and resamples every image to width x height.
AnchorDataset resample_dataset(const AnchorDataset& ds, int width, int height);

/// Writes `frame_0000.png`, `frame_0001.png`, ... into out_dir (created if needed).
/// `pattern` is a printf pattern with one integer conversion.
std::vector<std::filesystem::path> write_frames(const std::vector<Image>& frames,
                                                const std::filesystem::path& out_dir,
                                                const std::string& pattern = "frame_%04d.png");

}  // namespace gs4d
