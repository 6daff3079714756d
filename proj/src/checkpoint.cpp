// Copyright 2026 The gs4d Authors
// SPDX-License-Identifier: Apache-2.0

#include "gs4d/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

#include "json.hpp"

#include "gs4d/error.hpp"

namespace gs4d {

const char* stage_name(Stage s) {
  switch (s) {
    case Stage::Static: return "static";
    case Stage::Coarse: return "coarse";
    case Stage::Fine: return "fine";
  }
  return "?";
}

Stage stage_from_name(const std::string& name) {
  if (name == "static") return Stage::Static;
  if (name == "coarse") return Stage::Coarse;
  if (name == "fine") return Stage::Fine;
  throw FormatError("unknown stage '" + name + "'");
}

namespace {

using nlohmann::json;

struct ArrayRef {
  std::string name;
  std::vector<std::size_t> shape;
  const double* f64 = nullptr;
  std::vector<std::int64_t> i64;  // owned copy for integer arrays
  bool is_int = false;
};

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int k = 0; k < 4; ++k) b[k] = static_cast<unsigned char>(v >> (8 * k));
  os.write(reinterpret_cast<const char*>(b), 4);
}
void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(v >> (8 * k));
  os.write(reinterpret_cast<const char*>(b), 8);
}
std::uint64_t get_le(const unsigned char* p, int n) {
  std::uint64_t v = 0;
  for (int k = 0; k < n; ++k) v |= static_cast<std::uint64_t>(p[k]) << (8 * k);
  return v;
}

std::size_t element_count(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (auto s : shape) n *= s;
  return n;
}

json field_config_json(const FieldConfig& f) {
  return {{"num_levels", f.num_levels},         {"base_resolution", f.base_resolution},
          {"time_resolution", f.time_resolution}, {"channels", f.channels},
          {"hidden_width", f.hidden_width},     {"spatial_init_lo", f.spatial_init_lo},
          {"spatial_init_hi", f.spatial_init_hi}, {"seed", f.seed}};
}

FieldConfig field_config_from(const json& j) {
  FieldConfig f;
  f.num_levels = j.at("num_levels").get<int>();
  f.base_resolution = j.at("base_resolution").get<int>();
  f.time_resolution = j.at("time_resolution").get<int>();
  f.channels = j.at("channels").get<int>();
  f.hidden_width = j.at("hidden_width").get<int>();
  f.spatial_init_lo = j.at("spatial_init_lo").get<double>();
  f.spatial_init_hi = j.at("spatial_init_hi").get<double>();
  f.seed = j.at("seed").get<std::uint64_t>();
  return f;
}

std::string plane_key(int level, PlaneAxes a) {
  return "field/plane" + std::to_string(level) + "_" + plane_axes_name(a);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const TrainState& s = ckpt.state;
  const std::size_t n = s.scene.size();
  std::vector<ArrayRef> arrays;
  auto add = [&](std::string name, std::vector<std::size_t> shape, std::span<const double> data) {
    if (element_count(shape) != data.size())
      throw ContractError("checkpoint: array " + name + " has inconsistent size");
    arrays.push_back({std::move(name), std::move(shape), data.data(), {}});
  };
  add("scene/position", {n, 3}, s.scene.positions());
  add("scene/rotation", {n, 4}, s.scene.rotations());
  add("scene/log_scale", {n, 3}, s.scene.log_scales());
  add("scene/opacity_logit", {n}, s.scene.opacity_logits());
  add("scene/color", {n, 3}, s.scene.colors());
  if (s.has_field) {
    for (int l = 0; l < s.field.num_levels(); ++l)
      for (PlaneAxes a : kAllPlaneAxes) {
        const FeaturePlane& p = s.field.plane(l, a);
        add(plane_key(l, a),
            {static_cast<std::size_t>(p.rows), static_cast<std::size_t>(p.cols),
             static_cast<std::size_t>(p.channels)},
            p.values);
      }
    add("field/mlp", {s.field.mlp().params().size()}, s.field.mlp().params());
  }
  json steps = json::object();
  for (const AdamGroup* g : s.optimizer.all_groups()) {
    add("optim/" + g->name() + "/m", {g->size()}, g->m());
    add("optim/" + g->name() + "/v", {g->size()}, g->v());
    steps[g->name()] = g->step_count();
  }
  add("densify/grad_sum", {s.densify_stats.size()}, s.densify_stats.grad_sum);
  {
    ArrayRef r{"densify/visible_count", {s.densify_stats.size()}, nullptr, {}, true};
    for (auto c : s.densify_stats.visible_count) r.i64.push_back(c);
    arrays.push_back(std::move(r));
  }

  json meta = json::array();
  std::uint64_t offset = 0;
  for (const auto& a : arrays) {
    const std::uint64_t bytes = element_count(a.shape) * 8;
    meta.push_back({{"name", a.name},
                    {"dtype", a.is_int ? "int64" : "float64"},
                    {"shape", a.shape},
                    {"offset", offset},
                    {"nbytes", bytes}});
    offset += bytes;
  }
  json header = {
      {"format", "gs4d-checkpoint"},
      {"stage", stage_name(s.stage)},
      {"iteration", s.iteration},
      {"gaussian_count", n},
      {"creation_seed", s.scene.creation_seed()},
      {"has_field", s.has_field},
      {"field_config", s.has_field ? field_config_json(s.field.config()) : json(nullptr)},
      {"optimizer_has_field", s.optimizer.has_field},
      {"optimizer_steps", steps},
      {"rng", {{"name", CounterRng::kName},
               {"seed", s.rng.seed()},
               {"stream", s.rng.stream()},
               {"counter", s.rng.counter()}}},
      {"counters", {{"temporal_iterations", s.counters.temporal_iterations},
                    {"sds_iterations", s.counters.sds_iterations},
                    {"sds_skipped", s.counters.sds_skipped},
                    {"prior_calls", s.counters.prior_calls}}},
      {"front_camera", camera_to_json(s.front_camera)},
      {"radius", s.radius},
      {"config", config_to_json(ckpt.config)},
      {"arrays", meta},
  };
  const std::string text = header.dump();

  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint " + tmp.string());
    out.write(kCheckpointMagic, 8);
    put_u32(out, kCheckpointVersion);
    put_u64(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    std::vector<unsigned char> buf;
    for (const auto& a : arrays) {
      const std::size_t cnt = element_count(a.shape);
      buf.resize(cnt * 8);
      for (std::size_t i = 0; i < cnt; ++i) {
        const std::uint64_t u = !a.is_int ? std::bit_cast<std::uint64_t>(a.f64[i])
                                      : static_cast<std::uint64_t>(a.i64[i]);
        for (int k = 0; k < 8; ++k) buf[8 * i + k] = static_cast<unsigned char>(u >> (8 * k));
      }
      out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    }
    if (!out) throw IoError("failed writing checkpoint " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place at " + path.string() + ": " + ec.message());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 20) throw IoError("checkpoint truncated: " + path.string());
  if (std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0)
    throw FormatError("not a checkpoint (bad magic): " + path.string());
  const auto version = static_cast<std::uint32_t>(get_le(&bytes[8], 4));
  if (version != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  const std::uint64_t hlen = get_le(&bytes[12], 8);
  if (bytes.size() < 20 + hlen) throw IoError("checkpoint truncated in header: " + path.string());
  json h;
  try {
    h = json::parse(bytes.begin() + 20, bytes.begin() + 20 + static_cast<std::ptrdiff_t>(hlen));
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint header is not JSON: ") + e.what());
  }
  const std::size_t data0 = 20 + hlen;

  Checkpoint ck;
  TrainState& s = ck.state;
  try {
    std::map<std::string, json> meta;
    for (const auto& a : h.at("arrays")) meta[a.at("name").get<std::string>()] = a;
    auto fetch_raw = [&](const std::string& name, const std::vector<std::size_t>& shape,
                         const char* dtype) -> const unsigned char* {
      auto it = meta.find(name);
      if (it == meta.end()) throw FormatError("checkpoint lacks array " + name);
      const json& a = it->second;
      if (a.at("dtype").get<std::string>() != dtype)
        throw FormatError("checkpoint array " + name + " has dtype " + a.at("dtype").get<std::string>());
      if (a.at("shape").get<std::vector<std::size_t>>() != shape)
        throw FormatError("checkpoint array " + name + " has an unexpected shape");
      const std::uint64_t off = a.at("offset").get<std::uint64_t>();
      const std::uint64_t nb = a.at("nbytes").get<std::uint64_t>();
      if (nb != element_count(shape) * 8) throw FormatError("checkpoint array " + name + " size mismatch");
      if (data0 + off + nb > bytes.size()) throw IoError("checkpoint truncated in array " + name);
      return &bytes[data0 + off];
    };
    auto fetch = [&](const std::string& name, const std::vector<std::size_t>& shape,
                     std::span<double> out) {
      const unsigned char* p = fetch_raw(name, shape, "float64");
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::bit_cast<double>(get_le(p + 8 * i, 8));
    };

    s.stage = stage_from_name(h.at("stage").get<std::string>());
    s.iteration = h.at("iteration").get<std::int64_t>();
    const std::size_t n = h.at("gaussian_count").get<std::size_t>();
    s.scene = GaussianSet(h.at("creation_seed").get<std::uint64_t>());
    s.scene.reserve(n);
    for (std::size_t i = 0; i < n; ++i) s.scene.push_back(Gaussian{});
    fetch("scene/position", {n, 3}, s.scene.positions());
    fetch("scene/rotation", {n, 4}, s.scene.rotations());
    fetch("scene/log_scale", {n, 3}, s.scene.log_scales());
    fetch("scene/opacity_logit", {n}, s.scene.opacity_logits());
    fetch("scene/color", {n, 3}, s.scene.colors());

    s.has_field = h.at("has_field").get<bool>();
    if (s.has_field) {
      s.field = HexPlaneField(field_config_from(h.at("field_config")));
      for (int l = 0; l < s.field.num_levels(); ++l)
        for (PlaneAxes a : kAllPlaneAxes) {
          FeaturePlane& p = s.field.plane(l, a);
          fetch(plane_key(l, a),
                {static_cast<std::size_t>(p.rows), static_cast<std::size_t>(p.cols),
                 static_cast<std::size_t>(p.channels)},
                p.values);
        }
      fetch("field/mlp", {s.field.mlp().params().size()}, s.field.mlp().params());
    }

    s.optimizer = OptimizerState(s.scene);
    if (h.at("optimizer_has_field").get<bool>()) {
      if (!s.has_field) throw FormatError("checkpoint has field optimizer state but no field");
      s.optimizer.attach_field(s.field);
    }
    const json& steps = h.at("optimizer_steps");
    for (AdamGroup* g : s.optimizer.all_groups()) {
      fetch("optim/" + g->name() + "/m", {g->size()}, g->m());
      fetch("optim/" + g->name() + "/v", {g->size()}, g->v());
      g->set_step_count(steps.at(g->name()).get<std::int64_t>());
    }

    s.densify_stats.reset(meta.count("densify/grad_sum")
                              ? meta["densify/grad_sum"].at("shape").at(0).get<std::size_t>()
                              : 0);
    const std::size_t dn = s.densify_stats.size();
    fetch("densify/grad_sum", {dn}, s.densify_stats.grad_sum);
    const unsigned char* vc = fetch_raw("densify/visible_count", {dn}, "int64");
    for (std::size_t i = 0; i < dn; ++i)
      s.densify_stats.visible_count[i] = static_cast<std::uint32_t>(get_le(vc + 8 * i, 8));

    const json& rng = h.at("rng");
    if (rng.at("name").get<std::string>() != CounterRng::kName)
      throw FormatError("checkpoint uses RNG " + rng.at("name").get<std::string>());
    s.rng = CounterRng(rng.at("seed").get<std::uint64_t>(), rng.at("stream").get<std::uint64_t>(),
                       rng.at("counter").get<std::uint64_t>());
    const json& c = h.at("counters");
    s.counters.temporal_iterations = c.at("temporal_iterations").get<std::int64_t>();
    s.counters.sds_iterations = c.at("sds_iterations").get<std::int64_t>();
    s.counters.sds_skipped = c.at("sds_skipped").get<std::int64_t>();
    s.counters.prior_calls = c.at("prior_calls").get<std::int64_t>();
    s.front_camera = camera_from_json(h.at("front_camera"));
    s.radius = h.at("radius").get<double>();
    ck.config = config_from_json(h.at("config"));
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  } catch (const ParameterError& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
  return ck;
}

}  // namespace gs4d
