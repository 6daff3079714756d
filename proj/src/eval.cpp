// Copyright 2026 The gs4d Authors
// SPDX-License-Identifier: Apache-2.0

#include "gs4d/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <regex>
#include <sstream>

#include "gs4d/error.hpp"
#include "gs4d/ssim.hpp"

namespace gs4d {
namespace fs = std::filesystem;

double mse(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw ParameterError("mse: image shapes differ");
  if (a.empty()) throw ParameterError("mse: empty image");
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

double psnr(const Image& a, const Image& b) {
  const double m = mse(a, b);
  if (m == 0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / m);
}

namespace {

double capped(double p) { return std::min(p, kPsnrCap); }

void add_to(EvalAggregate& agg, const EvalEntry& e) {
  agg.mean_psnr += capped(e.psnr);
  agg.mean_ssim += e.ssim;
  ++agg.count;
}

void finalize(EvalAggregate& agg) {
  if (agg.count == 0) return;
  agg.mean_psnr /= static_cast<double>(agg.count);
  agg.mean_ssim /= static_cast<double>(agg.count);
}

nlohmann::json agg_json(const EvalAggregate& a) {
  return {{"count", a.count}, {"mean_psnr", a.mean_psnr}, {"mean_ssim", a.mean_ssim}};
}

}  // namespace

EvalReport summarize(std::vector<EvalEntry> entries) {
  EvalReport r;
  r.entries = std::move(entries);
  for (const auto& e : r.entries) {
    add_to(r.overall, e);
    if (e.view) add_to(r.per_view[*e.view], e);
    if (e.timestep) add_to(r.per_timestep[*e.timestep], e);
  }
  finalize(r.overall);
  for (auto& [k, a] : r.per_view) finalize(a);
  for (auto& [k, a] : r.per_timestep) finalize(a);
  return r;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json images = nlohmann::json::array();
  for (const auto& e : entries) {
    nlohmann::json j = {{"name", e.name},
                        {"psnr", capped(e.psnr)},
                        {"identical", e.identical()},
                        {"ssim", e.ssim}};
    if (e.timestep) j["timestep"] = *e.timestep;
    if (e.view) j["view"] = *e.view;
    images.push_back(j);
  }
  nlohmann::json views = nlohmann::json::object(), steps = nlohmann::json::object();
  for (const auto& [k, a] : per_view) views[std::to_string(k)] = agg_json(a);
  for (const auto& [k, a] : per_timestep) steps[std::to_string(k)] = agg_json(a);
  const bool all_identical =
      !entries.empty() && std::all_of(entries.begin(), entries.end(),
                                      [](const EvalEntry& e) { return e.identical(); });
  nlohmann::json o = agg_json(overall);
  o["identical"] = all_identical;
  return {{"images", images}, {"per_view", views}, {"per_timestep", steps}, {"overall", o}};
}

std::string EvalReport::table() const {
  std::ostringstream os;
  char buf[512];
  std::snprintf(buf, sizeof buf, "%-40s %10s %8s\n", "image", "PSNR", "SSIM");
  os << buf;
  for (const auto& e : entries) {
    if (e.identical())
      std::snprintf(buf, sizeof buf, "%-40s %10s %8.4f\n", e.name.c_str(), "identical", e.ssim);
    else
      std::snprintf(buf, sizeof buf, "%-40s %10.3f %8.4f\n", e.name.c_str(), e.psnr, e.ssim);
    os << buf;
  }
  for (const auto& [k, a] : per_view) {
    std::snprintf(buf, sizeof buf, "view %-35d %10.3f %8.4f\n", k, a.mean_psnr, a.mean_ssim);
    os << buf;
  }
  for (const auto& [k, a] : per_timestep) {
    std::snprintf(buf, sizeof buf, "timestep %-31d %10.3f %8.4f\n", k, a.mean_psnr, a.mean_ssim);
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "%-40s %10.3f %8.4f\n", "mean", overall.mean_psnr, overall.mean_ssim);
  os << buf;
  return os.str();
}

EvalReport evaluate_directories(const fs::path& renders, const fs::path& truth) {
  if (!fs::is_directory(renders)) throw IoError("not a directory: " + renders.string());
  if (!fs::is_directory(truth)) throw IoError("not a directory: " + truth.string());
  std::vector<std::string> names;
  for (const auto& de : fs::recursive_directory_iterator(renders))
    if (de.is_regular_file() && de.path().extension() == ".png")
      names.push_back(fs::relative(de.path(), renders).generic_string());
  std::sort(names.begin(), names.end());
  if (names.empty()) throw IoError("no .png images under " + renders.string());

  static const std::regex view_re(R"((?:^|/)t(\d+)/view(\d+)\.png$)");
  static const std::regex step_re(R"((?:^|/)(?:t|frame_)(\d+)\.png$)");
  std::vector<EvalEntry> entries;
  for (const auto& name : names) {
    const fs::path gt = truth / name;
    if (!fs::exists(gt)) throw IoError("missing ground-truth image " + gt.string());
    const Image a = read_png(renders / name);
    const Image b = read_png(gt);
    EvalEntry e;
    e.name = name;
    std::smatch m;
    if (std::regex_search(name, m, view_re)) {
      e.timestep = std::stoi(m[1]);
      e.view = std::stoi(m[2]);
    } else if (std::regex_search(name, m, step_re)) {
      e.timestep = std::stoi(m[1]);
    }
    e.psnr = psnr(a, b);
    e.ssim = ssim(a, b);
    entries.push_back(std::move(e));
  }
  return summarize(std::move(entries));
}

}  // namespace gs4d
