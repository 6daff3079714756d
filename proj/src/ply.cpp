// Copyright 2026 The gs4d Authors
// SPDX-License-Identifier: Apache-2.0

#include "gs4d/ply.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gs4d/error.hpp"

namespace gs4d {
namespace {

enum class PlyType { I8, U8, I16, U16, I32, U32, F32, F64 };

PlyType parse_type(const std::string& s) {
  static const std::map<std::string, PlyType> types = {
      {"char", PlyType::I8},    {"int8", PlyType::I8},     {"uchar", PlyType::U8},
      {"uint8", PlyType::U8},   {"short", PlyType::I16},   {"int16", PlyType::I16},
      {"ushort", PlyType::U16}, {"uint16", PlyType::U16},  {"int", PlyType::I32},
      {"int32", PlyType::I32},  {"uint", PlyType::U32},    {"uint32", PlyType::U32},
      {"float", PlyType::F32},  {"float32", PlyType::F32}, {"double", PlyType::F64},
      {"float64", PlyType::F64}};
  auto it = types.find(s);
  if (it == types.end()) throw FormatError("PLY: unknown property type '" + s + "'");
  return it->second;
}

std::size_t type_size(PlyType t) {
  switch (t) {
    case PlyType::I8:
    case PlyType::U8: return 1;
    case PlyType::I16:
    case PlyType::U16: return 2;
    case PlyType::I32:
    case PlyType::U32:
    case PlyType::F32: return 4;
    case PlyType::F64: return 8;
  }
  return 0;
}

double read_binary(const unsigned char* p, PlyType t) {
  std::uint64_t u = 0;
  for (std::size_t k = 0; k < type_size(t); ++k) u |= static_cast<std::uint64_t>(p[k]) << (8 * k);
  switch (t) {
    case PlyType::I8: return static_cast<std::int8_t>(u);
    case PlyType::U8: return static_cast<std::uint8_t>(u);
    case PlyType::I16: return static_cast<std::int16_t>(u);
    case PlyType::U16: return static_cast<std::uint16_t>(u);
    case PlyType::I32: return static_cast<std::int32_t>(u);
    case PlyType::U32: return static_cast<std::uint32_t>(u);
    case PlyType::F32: return std::bit_cast<float>(static_cast<std::uint32_t>(u));
    case PlyType::F64: return std::bit_cast<double>(u);
  }
  return 0;
}

struct Property {
  std::string name;
  PlyType type;
  bool is_list = false;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> props;
};

double color_scale(PlyType t) {
  switch (t) {
    case PlyType::U8: return 1.0 / 255.0;
    case PlyType::U16: return 1.0 / 65535.0;
    case PlyType::F32:
    case PlyType::F64: return 1.0;
    default: return 1.0 / 255.0;
  }
}

}  // namespace

GaussianSet init_from_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open PLY file " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.substr(0, 3) != "ply")
    throw FormatError("not a PLY file: " + path.string());

  bool binary = false, have_format = false;
  std::vector<Element> elements;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string kw;
    ls >> kw;
    if (kw == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt == "ascii")
        binary = false;
      else if (fmt == "binary_little_endian")
        binary = true;
      else
        throw FormatError("PLY: unsupported format '" + fmt + "'");
      have_format = true;
    } else if (kw == "element") {
      Element e;
      ls >> e.name >> e.count;
      if (!ls) throw FormatError("PLY: malformed element line");
      elements.push_back(e);
    } else if (kw == "property") {
      if (elements.empty()) throw FormatError("PLY: property before element");
      std::string t;
      ls >> t;
      Property p;
      if (t == "list") {
        std::string ct, it;
        ls >> ct >> it >> p.name;
        p.type = parse_type(it);
        p.is_list = true;
      } else {
        p.type = parse_type(t);
        ls >> p.name;
      }
      elements.back().props.push_back(p);
    } else if (kw == "end_header") {
      break;
    } else if (kw != "comment" && kw != "obj_info" && !kw.empty()) {
      throw FormatError("PLY: unexpected header line '" + line + "'");
    }
  }
  if (!have_format) throw FormatError("PLY: missing format line");

  std::size_t vi = elements.size();
  for (std::size_t i = 0; i < elements.size(); ++i)
    if (elements[i].name == "vertex") vi = i;
  if (vi == elements.size()) throw FormatError("PLY: no vertex element");
  for (std::size_t i = 0; i < vi; ++i)
    for (const auto& p : elements[i].props)
      if (p.is_list) throw FormatError("PLY: list properties before the vertex element");
  const Element& ve = elements[vi];
  std::map<std::string, std::size_t> idx;
  for (std::size_t k = 0; k < ve.props.size(); ++k) {
    if (ve.props[k].is_list) throw FormatError("PLY: list property in vertex element");
    idx[ve.props[k].name] = k;
  }
  for (const char* req : {"x", "y", "z"})
    if (!idx.count(req)) throw FormatError(std::string("PLY: missing vertex property ") + req);
  auto has = [&](std::initializer_list<const char*> names) {
    for (const char* n : names)
      if (!idx.count(n)) return false;
    return true;
  };
  const bool rgb = has({"red", "green", "blue"});
  const bool opacity = has({"opacity"});
  const bool scale = has({"scale_0", "scale_1", "scale_2"});
  const bool rot = has({"rot_0", "rot_1", "rot_2", "rot_3"});

  std::vector<double> row(ve.props.size());
  auto read_row = [&](std::size_t nprops, const std::vector<Property>& props) {
    if (binary) {
      unsigned char buf[8];
      for (std::size_t k = 0; k < nprops; ++k) {
        const std::size_t sz = type_size(props[k].type);
        if (!in.read(reinterpret_cast<char*>(buf), static_cast<std::streamsize>(sz)))
          throw FormatError("PLY: truncated vertex data in " + path.string());
        row[k] = read_binary(buf, props[k].type);
      }
    } else {
      if (!std::getline(in, line)) throw FormatError("PLY: truncated vertex data in " + path.string());
      std::istringstream ls(line);
      for (std::size_t k = 0; k < nprops; ++k)
        if (!(ls >> row[k])) throw FormatError("PLY: malformed vertex line '" + line + "'");
    }
  };
  for (std::size_t i = 0; i < vi; ++i) {
    row.resize(std::max(row.size(), elements[i].props.size()));
    for (std::size_t r = 0; r < elements[i].count; ++r) read_row(elements[i].props.size(), elements[i].props);
  }
  row.resize(ve.props.size());

  GaussianSet set;
  set.reserve(ve.count);
  for (std::size_t r = 0; r < ve.count; ++r) {
    read_row(ve.props.size(), ve.props);
    Gaussian g;
    g.position = Vec3(row[idx["x"]], row[idx["y"]], row[idx["z"]]);
    if (rgb) {
      const double s = color_scale(ve.props[idx["red"]].type);
      g.color = Vec3(row[idx["red"]], row[idx["green"]], row[idx["blue"]]) * s;
      g.color = g.color.cwiseMax(0.0).cwiseMin(1.0);
    }
    if (opacity) {
      const double a = std::clamp(row[idx["opacity"]], 1e-6, 1 - 1e-6);
      g.opacity_logit = logit(a);
    }
    if (scale)
      for (int k = 0; k < 3; ++k)
        g.log_scale[k] = std::log(std::max(row[idx["scale_" + std::to_string(k)]], 1e-12));
    if (rot) {
      for (int k = 0; k < 4; ++k) g.rotation[k] = row[idx["rot_" + std::to_string(k)]];
      if (g.rotation.norm() == 0) g.rotation = Vec4(1, 0, 0, 0);
      g.rotation.normalize();
    }
    if (!g.position.allFinite()) throw FormatError("PLY: non-finite vertex position");
    set.push_back(g);
  }
  return set;
}

void export_ply(const GaussianSet& set, const std::filesystem::path& path) {
  if (set.empty()) throw ParameterError("export_ply: empty set");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write PLY file " + path.string());
  out << "ply\nformat binary_little_endian 1.0\nelement vertex " << set.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\n"
      << "property uchar red\nproperty uchar green\nproperty uchar blue\n"
      << "property float opacity\n"
      << "property float scale_0\nproperty float scale_1\nproperty float scale_2\n"
      << "property float rot_0\nproperty float rot_1\nproperty float rot_2\nproperty float rot_3\n"
      << "end_header\n";
  std::vector<unsigned char> buf;
  buf.reserve(set.size() * kPlyVertexBytes);
  auto put_f32 = [&](double v) {
    const auto u = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    for (int k = 0; k < 4; ++k) buf.push_back(static_cast<unsigned char>(u >> (8 * k)));
  };
  for (std::size_t i = 0; i < set.size(); ++i) {
    const Gaussian g = set.at(i);
    for (int k = 0; k < 3; ++k) put_f32(g.position[k]);
    for (int k = 0; k < 3; ++k)
      buf.push_back(static_cast<unsigned char>(std::floor(std::clamp(g.color[k], 0.0, 1.0) * 255 + 0.5)));
    put_f32(g.opacity());
    for (int k = 0; k < 3; ++k) put_f32(std::exp(g.log_scale[k]));
    for (int k = 0; k < 4; ++k) put_f32(g.rotation[k]);
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace gs4d
