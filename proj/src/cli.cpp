// Copyright 2026 The gs4d Authors
// SPDX-License-Identifier: Apache-2.0

#include "gs4d/cli.hpp"

#include <omp.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"

#include "gs4d/checkpoint.hpp"
#include "gs4d/dataset.hpp"
#include "gs4d/error.hpp"
#include "gs4d/eval.hpp"
#include "gs4d/ply.hpp"
#include "gs4d/trainer.hpp"

namespace gs4d {
namespace {

struct Options {
  std::string config, dataset, checkpoint, out, log, init_ply;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string orbit, timesteps = "0:1:1", resolution;
  std::string renders, truth;
  double time = -1;
};

void apply_threads(std::ostream& err) {
  const char* env = std::getenv("GS4D_THREADS");
  if (!env || !*env) return;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1) {
    err << "warning: ignoring invalid GS4D_THREADS='" << env << "'\n";
    return;
  }
  omp_set_num_threads(static_cast<int>(n));
}

std::vector<double> split_numbers(const std::string& s, char sep, std::size_t expected,
                                  const char* what) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw CLI::ValidationError(what, "cannot parse '" + s + "'");
    }
  }
  if (v.size() != expected) throw CLI::ValidationError(what, "expected " + std::to_string(expected) + " values");
  return v;
}

std::vector<double> parse_timesteps(const std::string& s) {
  const auto v = split_numbers(s, ':', 3, "--timesteps");
  const int count = static_cast<int>(v[2]);
  if (count < 1 || v[2] != count) throw CLI::ValidationError("--timesteps", "count must be a positive integer");
  std::vector<double> times;
  for (int i = 0; i < count; ++i)
    times.push_back(count == 1 ? v[0] : v[0] + (v[1] - v[0]) * i / (count - 1));
  for (double t : times)
    if (t < 0 || t > 1) throw CLI::ValidationError("--timesteps", "times must lie in [0,1]");
  return times;
}

std::pair<int, int> parse_resolution(const std::string& s) {
  const auto x = s.find('x');
  if (x == std::string::npos) throw CLI::ValidationError("--resolution", "expected WxH");
  try {
    const int w = std::stoi(s.substr(0, x)), h = std::stoi(s.substr(x + 1));
    if (w < 1 || h < 1) throw std::invalid_argument(s);
    return {w, h};
  } catch (const std::exception&) {
    throw CLI::ValidationError("--resolution", "expected WxH with positive integers");
  }
}

TrainConfig resolve_config(const Options& o, const TrainConfig* fallback) {
  TrainConfig cfg = !o.config.empty() ? load_config(o.config) : fallback ? *fallback : TrainConfig{};
  if (o.seed_set) cfg.seed = o.seed;
  if (!o.init_ply.empty()) cfg.init_ply = o.init_ply;
  cfg.validate();
  return cfg;
}

StageHooks make_hooks(const Options& o, const TrainConfig& cfg, std::ostream& err,
                      std::ofstream& log_file) {
  StageHooks hooks;
  std::ostream* sink = &err;
  if (!o.log.empty()) {
    log_file.open(o.log, std::ios::app);
    if (!log_file) throw IoError("cannot open log file " + o.log);
    sink = &log_file;
  }
  hooks.log = [sink](const nlohmann::json& line) { *sink << line.dump() << '\n'; };
  hooks.checkpoint = [path = o.out, cfg](const TrainState& s) {
    save_checkpoint(path, Checkpoint{s, cfg});
  };
  return hooks;
}

std::unique_ptr<Prior> make_prior(const TrainConfig& cfg) {
  if (cfg.prior == "remote") {
    RemotePriorOptions opt;
    opt.guidance_scale = cfg.guidance_scale;
    return std::make_unique<RemotePrior>(cfg.prior_endpoint, opt);
  }
  if (cfg.prior == "oracle")
    throw ParameterError("the oracle prior needs ground-truth targets and is only available in-process");
  return nullptr;
}

int cmd_train(Stage stage, const Options& o, std::ostream& err) {
  std::optional<Checkpoint> ck;
  if (!o.checkpoint.empty()) ck = load_checkpoint(o.checkpoint);
  if (stage != Stage::Static && !ck) throw ParameterError("--checkpoint is required");
  const TrainConfig cfg = resolve_config(o, ck ? &ck->config : nullptr);
  const AnchorDataset ds = load_dataset(o.dataset);
  std::unique_ptr<Prior> prior = stage == Stage::Fine ? make_prior(cfg) : nullptr;
  Trainer tr(cfg, ds, prior.get());

  TrainState state;
  if (stage == Stage::Static) {
    if (ck) {
      if (ck->state.stage != Stage::Static)
        throw TrainingError("checkpoint is past the static stage");
      state = std::move(ck->state);
    } else {
      state = tr.begin_static(initial_scene(cfg));
    }
  } else {
    state = std::move(ck->state);
    const Stage prev = stage == Stage::Coarse ? Stage::Static : Stage::Coarse;
    if (state.stage == prev)
      stage == Stage::Coarse ? tr.begin_coarse(state) : tr.begin_fine(state);
    else if (state.stage != stage)
      throw TrainingError(std::string("checkpoint stage '") + stage_name(state.stage) +
                          "' cannot start the " + stage_name(stage) + " stage");
  }
  std::ofstream log_file;
  StageHooks hooks = make_hooks(o, cfg, err, log_file);
  tr.run(state, hooks);
  // run() writes the final checkpoint; a resumed, already complete stage still gets one.
  if (tr.stage_complete(state)) save_checkpoint(o.out, Checkpoint{state, cfg});
  err << stage_name(stage) << " stage done: " << state.scene.size() << " Gaussians";
  if (stage == Stage::Fine)
    err << ", temporal " << state.counters.temporal_iterations << ", sds " << state.counters.sds_iterations
        << ", sds skipped " << state.counters.sds_skipped;
  err << "\n";
  return kExitOk;
}

int cmd_render(const Options& o, std::ostream& err) {
  const Checkpoint ck = load_checkpoint(o.checkpoint);
  const auto times = parse_timesteps(o.timesteps);
  Intrinsics k = ck.state.front_camera.intrinsics();
  if (!o.resolution.empty()) {
    const auto [w, h] = parse_resolution(o.resolution);
    k = k.scaled_to(w, h);
  }
  Camera cam(k, ck.state.front_camera.world_to_cam);
  if (!o.orbit.empty()) {
    const auto v = split_numbers(o.orbit, ',', 3, "--orbit");
    OrbitPose pose;
    pose.azimuth_deg = v[0];
    pose.elevation_deg = v[1];
    pose.radius = v[2];
    cam = orbit_to_camera(pose, k);
  }
  std::vector<Image> frames;
  for (double t : times) frames.push_back(render_state(ck.state, cam, t, ck.config.background_color()));
  const auto paths = write_frames(frames, o.out);
  err << "wrote " << paths.size() << " frames to " << o.out << "\n";
  return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out, std::ostream& err) {
  const EvalReport r = evaluate_directories(o.renders, o.truth);
  const std::string text = r.to_json().dump(2) + "\n";
  if (o.out == "-") {
    out << text;
  } else {
    std::ofstream f(o.out);
    if (!f) throw IoError("cannot write " + o.out);
    f << text;
  }
  err << r.table();
  return kExitOk;
}

int cmd_export(const Options& o, std::ostream& err) {
  const Checkpoint ck = load_checkpoint(o.checkpoint);
  GaussianSet set = ck.state.scene;
  if (o.time >= 0) {
    if (o.time > 1) throw ParameterError("--time must lie in [0,1]");
    const auto pos = state_positions(ck.state, o.time);
    std::copy(pos.begin(), pos.end(), set.positions().begin());
  }
  export_ply(set, o.out);
  err << "exported " << set.size() << " Gaussians to " << o.out << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"gs4d: deformable 4D Gaussian splatting"};
  app.require_subcommand(1);
  Options o;

  auto add_train = [&](const char* name, const char* desc, bool ckpt_required) {
    CLI::App* c = app.add_subcommand(name, desc);
    c->add_option("--dataset", o.dataset, "dataset directory")->required();
    c->add_option("--config", o.config, "TOML or JSON config file");
    c->add_option("--checkpoint", o.checkpoint, "checkpoint to start from or resume")
        ->required(ckpt_required);
    c->add_option("--out", o.out, "checkpoint file to write")->required();
    c->add_option("--seed", o.seed, "RNG seed (overrides the config)");
    c->add_option("--log", o.log, "append per-iteration JSON lines here instead of stderr");
    return c;
  };
  CLI::App* ts = add_train("train-static", "optimize the static scene against frame-0 labels", false);
  ts->add_option("--init-ply", o.init_ply, "initial point cloud");
  CLI::App* tc = add_train("train-coarse", "pseudo-label warm-up of the deformation field", true);
  CLI::App* tf = add_train("train-fine", "fine stage with temporal and SDS iterations", true);

  CLI::App* rd = app.add_subcommand("render", "render frames from a checkpoint");
  rd->add_option("--checkpoint", o.checkpoint)->required();
  rd->add_option("--orbit", o.orbit, "az,el,radius in degrees/world units");
  rd->add_option("--timesteps", o.timesteps, "start:end:count normalized times");
  rd->add_option("--resolution", o.resolution, "WxH");
  rd->add_option("--out", o.out, "output directory")->required();

  CLI::App* ev = app.add_subcommand("eval", "PSNR/SSIM of renders against ground truth");
  ev->add_option("--renders", o.renders)->required();
  ev->add_option("--truth", o.truth)->required();
  ev->add_option("--out", o.out, "JSON report path, '-' for stdout")->default_val("-");

  CLI::App* ex = app.add_subcommand("export", "write the scene as PLY");
  ex->add_option("--checkpoint", o.checkpoint)->required();
  ex->add_option("--out", o.out)->required();
  ex->add_option("--time", o.time, "export deformed positions at this normalized time");

  try {
    app.parse(argc, argv);
    for (CLI::App* c : {ts, tc, tf})
      if (c->parsed() && c->count("--seed")) o.seed_set = true;
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n\n";
    const CLI::App* failing = &app;
    for (const CLI::App* c : app.get_subcommands()) failing = c;
    err << failing->help();
    return kExitUsage;
  }

  apply_threads(err);
  try {
    if (ts->parsed()) return cmd_train(Stage::Static, o, err);
    if (tc->parsed()) return cmd_train(Stage::Coarse, o, err);
    if (tf->parsed()) return cmd_train(Stage::Fine, o, err);
    if (rd->parsed()) return cmd_render(o, err);
    if (ev->parsed()) return cmd_eval(o, out, err);
    if (ex->parsed()) return cmd_export(o, err);
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace gs4d
