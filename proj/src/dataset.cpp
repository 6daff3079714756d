// Copyright 2026 The gs4d Authors
// SPDX-License-Identifier: Apache-2.0

#include "gs4d/dataset.hpp"

#include <cstdio>
#include <fstream>

#include "json.hpp"

#include "gs4d/error.hpp"

namespace gs4d {
namespace fs = std::filesystem;

namespace {

std::string four(int v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d", v);
  return buf;
}
std::string two(int v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d", v);
  return buf;
}

Image read_required(const fs::path& p, bool mask) {
  if (!fs::exists(p)) throw IoError("missing dataset file: " + p.string());
  return mask ? read_png_mask(p) : read_png(p);
}

}  // namespace

fs::path label_path(const fs::path& root, int anchor, int view) {
  return root / "frames" / ("t" + four(anchor)) / ("view" + two(view) + ".png");
}
fs::path mask_path(const fs::path& root, int anchor, int view) {
  return root / "masks" / ("t" + four(anchor)) / ("view" + two(view) + ".png");
}
fs::path reference_path(const fs::path& root, int anchor) {
  return root / "input" / ("t" + four(anchor) + ".png");
}

double AnchorDataset::anchor_time(int anchor) const {
  if (num_anchors < 2) return 0.0;
  return static_cast<double>(anchor) / (num_anchors - 1);
}

void AnchorDataset::validate() const {
  if (num_anchors < 2) throw ParameterError("dataset: need at least 2 anchor timesteps");
  if (cameras.empty()) throw ParameterError("dataset: need at least one view");
  if (front_view_index < 0 || front_view_index >= num_views())
    throw ParameterError("dataset: front_view_index out of range");
  if (labels.size() != static_cast<std::size_t>(num_anchors) ||
      reference.size() != static_cast<std::size_t>(num_anchors))
    throw FormatError("dataset: label/reference count differs from num_anchors");
  if (!masks.empty() && masks.size() != labels.size())
    throw FormatError("dataset: mask count differs from labels");
  const int w = width(), h = height();
  for (const auto& c : cameras) {
    c.validate();
    if (c.width != w || c.height != h)
      throw FormatError("dataset: camera resolution differs from the images");
  }
  for (int t = 0; t < num_anchors; ++t) {
    if (reference[t].width != w || reference[t].height != h || reference[t].channels != 3)
      throw FormatError("dataset: reference frame " + std::to_string(t) + " has another size");
    if (labels[t].size() != cameras.size())
      throw FormatError("dataset: anchor " + std::to_string(t) + " has the wrong view count");
    for (std::size_t v = 0; v < labels[t].size(); ++v) {
      const Image& l = labels[t][v];
      if (l.width != w || l.height != h || l.channels != 3)
        throw FormatError("dataset: label t" + std::to_string(t) + " view " + std::to_string(v) +
                          " has another size");
      if (!masks.empty()) {
        const Image& m = masks[t].at(v);
        if (m.width != w || m.height != h || m.channels != 1)
          throw FormatError("dataset: mask dimensions differ from labels");
      }
    }
  }
}

AnchorDataset load_dataset(const fs::path& root) {
  const fs::path cfg_path = root / "config.json";
  std::ifstream in(cfg_path);
  if (!in) throw IoError("missing dataset file: " + cfg_path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(cfg_path.string() + ": " + e.what());
  }
  AnchorDataset ds;
  try {
    ds.num_anchors = j.at("num_anchors").get<int>();
    for (const auto& v : j.at("views")) ds.cameras.push_back(camera_from_json(v));
    ds.radius = j.at("radius").get<double>();
    ds.front_view_index = j.value("front_view_index", 0);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(cfg_path.string() + ": " + e.what());
  }
  if (ds.num_anchors < 2) throw FormatError(cfg_path.string() + ": num_anchors must be >= 2");
  if (ds.cameras.empty()) throw FormatError(cfg_path.string() + ": no views");

  const bool masks = fs::is_directory(root / "masks");
  ds.labels.resize(ds.num_anchors);
  if (masks) ds.masks.resize(ds.num_anchors);
  for (int t = 0; t < ds.num_anchors; ++t) {
    ds.reference.push_back(read_required(reference_path(root, t), false));
    for (int v = 0; v < ds.num_views(); ++v) {
      ds.labels[t].push_back(read_required(label_path(root, t, v), false));
      if (masks) ds.masks[t].push_back(read_required(mask_path(root, t, v), true));
    }
  }
  ds.validate();
  return ds;
}

void save_dataset(const AnchorDataset& ds, const fs::path& root) {
  ds.validate();
  std::error_code ec;
  fs::create_directories(root, ec);
  nlohmann::json views = nlohmann::json::array();
  for (const auto& c : ds.cameras) views.push_back(camera_to_json(c));
  const nlohmann::json cfg = {{"num_anchors", ds.num_anchors},
                              {"views", views},
                              {"radius", ds.radius},
                              {"front_view_index", ds.front_view_index}};
  std::ofstream out(root / "config.json");
  if (!out) throw IoError("cannot write " + (root / "config.json").string());
  out << cfg.dump(2) << "\n";
  for (int t = 0; t < ds.num_anchors; ++t) {
    fs::create_directories(reference_path(root, t).parent_path());
    write_png(reference_path(root, t), ds.reference[t]);
    for (int v = 0; v < ds.num_views(); ++v) {
      fs::create_directories(label_path(root, t, v).parent_path());
      write_png(label_path(root, t, v), ds.labels[t][v]);
      if (ds.has_masks()) {
        fs::create_directories(mask_path(root, t, v).parent_path());
        write_png(mask_path(root, t, v), ds.masks[t][v]);
      }
    }
  }
}

AnchorDataset resample_dataset(const AnchorDataset& ds, int width, int height) {
  AnchorDataset out = ds;
  for (auto& c : out.cameras) c = Camera(c.intrinsics().scaled_to(width, height), c.world_to_cam);
  for (auto& r : out.reference) r = resize_bilinear(r, width, height);
  for (auto& views : out.labels)
    for (auto& l : views) l = resize_bilinear(l, width, height);
  for (auto& views : out.masks)
    for (auto& m : views) m = resize_bilinear(m, width, height);
  return out;
}

std::vector<fs::path> write_frames(const std::vector<Image>& frames, const fs::path& out_dir,
                                   const std::string& pattern) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (!fs::is_directory(out_dir)) throw IoError("cannot create directory " + out_dir.string());
  std::vector<fs::path> paths;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    char buf[256];
    std::snprintf(buf, sizeof buf, pattern.c_str(), static_cast<int>(i));
    paths.push_back(out_dir / buf);
    write_png(paths.back(), frames[i]);
  }
  return paths;
}

}  // namespace gs4d
