// Copyright 2026 The gs4d Authors
// SPDX-License-Identifier: Apache-2.0

#include "gs4d/hexplane.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "gs4d/error.hpp"
#include "gs4d/rng.hpp"

namespace gs4d {

const char* plane_axes_name(PlaneAxes a) {
  switch (a) {
    case PlaneAxes::XY: return "xy";
    case PlaneAxes::XZ: return "xz";
    case PlaneAxes::YZ: return "yz";
    case PlaneAxes::XT: return "xt";
    case PlaneAxes::YT: return "yt";
    case PlaneAxes::ZT: return "zt";
  }
  return "?";
}

FeaturePlane::FeaturePlane(int r, int c, int ch, PlaneAxes a, double fill)
    : rows(r), cols(c), channels(ch), axes(a) {
  if (r < 1 || c < 1 || ch < 1) throw ParameterError("FeaturePlane: dimensions must be >= 1");
  values.assign(static_cast<std::size_t>(r) * c * ch, fill);
}

namespace {

struct BilinearCell {
  int r0, c0;
  double wa, wb;
  bool a_inside, b_inside;  // coordinate not clamped
};

BilinearCell locate(const FeaturePlane& p, double a, double b) {
  if (p.rows < 2 || p.cols < 2) throw ParameterError("query_plane: plane must be at least 2x2");
  BilinearCell cell;
  cell.a_inside = a >= 0.0 && a <= 1.0;
  cell.b_inside = b >= 0.0 && b <= 1.0;
  const double fa = std::clamp(a, 0.0, 1.0) * (p.rows - 1);
  const double fb = std::clamp(b, 0.0, 1.0) * (p.cols - 1);
  cell.r0 = std::min(static_cast<int>(fa), p.rows - 2);
  cell.c0 = std::min(static_cast<int>(fb), p.cols - 2);
  cell.wa = fa - cell.r0;
  cell.wb = fb - cell.c0;
  return cell;
}

}  // namespace

void query_plane(const FeaturePlane& p, double a, double b, std::span<double> out) {
  if (out.size() != static_cast<std::size_t>(p.channels))
    throw ParameterError("query_plane: output size must equal channel count");
  const BilinearCell k = locate(p, a, b);
  const double* v00 = &p.values[(static_cast<std::size_t>(k.r0) * p.cols + k.c0) * p.channels];
  const double* v01 = v00 + p.channels;
  const double* v10 = v00 + static_cast<std::size_t>(p.cols) * p.channels;
  const double* v11 = v10 + p.channels;
  // Nested lerps so that a constant plane returns its value exactly.
  for (int c = 0; c < p.channels; ++c) {
    const double top = v00[c] + k.wb * (v01[c] - v00[c]);
    const double bottom = v10[c] + k.wb * (v11[c] - v10[c]);
    out[c] = top + k.wa * (bottom - top);
  }
}

std::vector<double> query_plane(const FeaturePlane& p, double a, double b) {
  std::vector<double> out(p.channels);
  query_plane(p, a, b, out);
  return out;
}

void query_plane_backward(const FeaturePlane& p, double a, double b,
                          std::span<const double> d_out, std::span<double> d_values, double* d_a,
                          double* d_b) {
  const BilinearCell k = locate(p, a, b);
  const double w00 = (1 - k.wa) * (1 - k.wb), w01 = (1 - k.wa) * k.wb, w10 = k.wa * (1 - k.wb),
               w11 = k.wa * k.wb;
  const std::size_t i00 = (static_cast<std::size_t>(k.r0) * p.cols + k.c0) * p.channels;
  const std::size_t i01 = i00 + p.channels;
  const std::size_t i10 = i00 + static_cast<std::size_t>(p.cols) * p.channels;
  const std::size_t i11 = i10 + p.channels;
  double ga = 0, gb = 0;
  for (int c = 0; c < p.channels; ++c) {
    const double g = d_out[c];
    if (!d_values.empty()) {
      d_values[i00 + c] += w00 * g;
      d_values[i01 + c] += w01 * g;
      d_values[i10 + c] += w10 * g;
      d_values[i11 + c] += w11 * g;
    }
    const double v00 = p.values[i00 + c], v01 = p.values[i01 + c], v10 = p.values[i10 + c],
                 v11 = p.values[i11 + c];
    ga += g * ((1 - k.wb) * (v10 - v00) + k.wb * (v11 - v01));
    gb += g * ((1 - k.wa) * (v01 - v00) + k.wa * (v11 - v10));
  }
  if (d_a) *d_a = k.a_inside ? ga * (p.rows - 1) : 0.0;
  if (d_b) *d_b = k.b_inside ? gb * (p.cols - 1) : 0.0;
}

int default_time_resolution(int num_anchors) { return std::max(num_anchors, 8); }

// ---------------------------------------------------------------------------
// Mlp

namespace {
using MatMap = Eigen::Map<Eigen::MatrixXd>;
using ConstMatMap = Eigen::Map<const Eigen::MatrixXd>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

struct MlpLayout {
  std::size_t w1, b1, w2, b2, w3, b3, total;
  MlpLayout(int in, int h, int out) {
    w1 = 0;
    b1 = w1 + static_cast<std::size_t>(h) * in;
    w2 = b1 + h;
    b2 = w2 + static_cast<std::size_t>(h) * h;
    w3 = b2 + h;
    b3 = w3 + static_cast<std::size_t>(out) * h;
    total = b3 + out;
  }
};
}  // namespace

Mlp::Mlp(int in_dim, int hidden, int out_dim) : in_(in_dim), hidden_(hidden), out_(out_dim) {
  if (in_dim < 1 || hidden < 1 || out_dim < 1) throw ParameterError("Mlp: dims must be >= 1");
  params_.assign(MlpLayout(in_, hidden_, out_).total, 0.0);
}

void Mlp::initialize(std::uint64_t seed) {
  const MlpLayout l(in_, hidden_, out_);
  std::fill(params_.begin(), params_.end(), 0.0);
  CounterRng rng(seed, /*stream=*/0x3119);
  const double bound1 = 1.0 / std::sqrt(static_cast<double>(in_));
  const double bound2 = 1.0 / std::sqrt(static_cast<double>(hidden_));
  for (std::size_t i = l.w1; i < l.b1; ++i) params_[i] = rng.uniform(-bound1, bound1);
  for (std::size_t i = l.w2; i < l.b2; ++i) params_[i] = rng.uniform(-bound2, bound2);
}

std::vector<double> Mlp::forward(std::span<const double> inputs, std::size_t n) const {
  const MlpLayout l(in_, hidden_, out_);
  const long ni = static_cast<long>(n);
  ConstMatMap x(inputs.data(), in_, ni);
  ConstMatMap w1(&params_[l.w1], hidden_, in_);
  ConstVecMap b1(&params_[l.b1], hidden_);
  ConstMatMap w2(&params_[l.w2], hidden_, hidden_);
  ConstVecMap b2(&params_[l.b2], hidden_);
  ConstMatMap w3(&params_[l.w3], out_, hidden_);
  ConstVecMap b3(&params_[l.b3], out_);
  const Eigen::MatrixXd a1 = ((w1 * x).colwise() + b1).cwiseMax(0.0);
  const Eigen::MatrixXd a2 = ((w2 * a1).colwise() + b2).cwiseMax(0.0);
  std::vector<double> y(static_cast<std::size_t>(out_) * n);
  MatMap(y.data(), out_, ni) = (w3 * a2).colwise() + b3;
  return y;
}

void Mlp::backward(std::span<const double> inputs, std::size_t n, std::span<const double> d_out,
                   std::span<double> d_params, std::span<double> d_inputs) const {
  const MlpLayout l(in_, hidden_, out_);
  if (d_params.size() != l.total) throw ParameterError("Mlp::backward: d_params size");
  const long ni = static_cast<long>(n);
  ConstMatMap x(inputs.data(), in_, ni);
  ConstMatMap w1(&params_[l.w1], hidden_, in_);
  ConstVecMap b1(&params_[l.b1], hidden_);
  ConstMatMap w2(&params_[l.w2], hidden_, hidden_);
  ConstVecMap b2(&params_[l.b2], hidden_);
  ConstMatMap w3(&params_[l.w3], out_, hidden_);
  ConstMatMap dy(d_out.data(), out_, ni);

  const Eigen::MatrixXd z1 = (w1 * x).colwise() + b1;
  const Eigen::MatrixXd a1 = z1.cwiseMax(0.0);
  const Eigen::MatrixXd z2 = (w2 * a1).colwise() + b2;
  const Eigen::MatrixXd a2 = z2.cwiseMax(0.0);

  MatMap(&d_params[l.w3], out_, hidden_) += dy * a2.transpose();
  VecMap(&d_params[l.b3], out_) += dy.rowwise().sum();
  const Eigen::MatrixXd dz2 =
      ((w3.transpose() * dy).array() * (z2.array() > 0.0).cast<double>()).matrix();
  MatMap(&d_params[l.w2], hidden_, hidden_) += dz2 * a1.transpose();
  VecMap(&d_params[l.b2], hidden_) += dz2.rowwise().sum();
  const Eigen::MatrixXd dz1 =
      ((w2.transpose() * dz2).array() * (z1.array() > 0.0).cast<double>()).matrix();
  MatMap(&d_params[l.w1], hidden_, in_) += dz1 * x.transpose();
  VecMap(&d_params[l.b1], hidden_) += dz1.rowwise().sum();
  if (!d_inputs.empty()) MatMap(d_inputs.data(), in_, ni) = w1.transpose() * dz1;
}

// ---------------------------------------------------------------------------
// HexPlaneField

HexPlaneField::HexPlaneField(const FieldConfig& cfg) : config_(cfg) {
  if (cfg.num_levels < 1 || cfg.base_resolution < 2 || cfg.channels < 1 || cfg.hidden_width < 1)
    throw ParameterError("HexPlaneField: invalid configuration");
  if (cfg.time_resolution > 0 && cfg.time_resolution < 2)
    throw ParameterError("HexPlaneField: time resolution must be >= 2");
  CounterRng rng(cfg.seed, /*stream=*/0x9a11);
  for (int level = 0; level < cfg.num_levels; ++level) {
    const int res = spatial_resolution(level);
    const int tres = time_resolution(level);
    for (PlaneAxes a : kAllPlaneAxes) {
      if (is_time_plane(a)) {
        planes_.emplace_back(res, tres, cfg.channels, a, 1.0);
      } else {
        FeaturePlane p(res, res, cfg.channels, a);
        for (double& v : p.values) v = rng.uniform(cfg.spatial_init_lo, cfg.spatial_init_hi);
        planes_.push_back(std::move(p));
      }
    }
  }
  mlp_ = Mlp(feature_dim(), cfg.hidden_width, 3);
  mlp_.initialize(mix_seed(cfg.seed, 1));
}

int HexPlaneField::time_resolution(int level) const {
  return config_.time_resolution > 0 ? config_.time_resolution : spatial_resolution(level);
}

std::size_t HexPlaneField::parameter_count() const {
  std::size_t n = mlp_.params().size();
  for (const auto& p : planes_) n += p.size();
  return n;
}

void HexPlaneField::check_finite() const {
  for (const auto& p : planes_)
    for (double v : p.values)
      if (!std::isfinite(v))
        throw NumericalError(std::string("non-finite value in plane ") + plane_axes_name(p.axes));
  for (double v : mlp_.params())
    if (!std::isfinite(v)) throw NumericalError("non-finite MLP parameter");
}

FieldGradients::FieldGradients(const HexPlaneField& field) {
  for (const auto& p : field.planes()) planes.emplace_back(p.size(), 0.0);
  mlp.assign(field.mlp().params().size(), 0.0);
}

void FieldGradients::set_zero() {
  for (auto& p : planes) std::fill(p.begin(), p.end(), 0.0);
  std::fill(mlp.begin(), mlp.end(), 0.0);
}

void FieldGradients::add(const FieldGradients& o, double scale) {
  if (o.planes.size() != planes.size() || o.mlp.size() != mlp.size())
    throw ParameterError("FieldGradients::add: shape mismatch");
  for (std::size_t k = 0; k < planes.size(); ++k)
    for (std::size_t i = 0; i < planes[k].size(); ++i) planes[k][i] += scale * o.planes[k][i];
  for (std::size_t i = 0; i < mlp.size(); ++i) mlp[i] += scale * o.mlp[i];
}

namespace {

// Plane lookup coordinates for normalized (x, y, z) in [0,1] and t.
inline std::pair<double, double> plane_coords(PlaneAxes a, const double u[3], double t) {
  switch (a) {
    case PlaneAxes::XY: return {u[0], u[1]};
    case PlaneAxes::XZ: return {u[0], u[2]};
    case PlaneAxes::YZ: return {u[1], u[2]};
    case PlaneAxes::XT: return {u[0], t};
    case PlaneAxes::YT: return {u[1], t};
    case PlaneAxes::ZT: return {u[2], t};
  }
  return {0, 0};
}

// Spatial axis indices feeding (a, b); -1 for time.
inline std::pair<int, int> plane_spatial_axes(PlaneAxes a) {
  switch (a) {
    case PlaneAxes::XY: return {0, 1};
    case PlaneAxes::XZ: return {0, 2};
    case PlaneAxes::YZ: return {1, 2};
    case PlaneAxes::XT: return {0, -1};
    case PlaneAxes::YT: return {1, -1};
    case PlaneAxes::ZT: return {2, -1};
  }
  return {-1, -1};
}

// Fills `lookups` (levels x 6 x F) and `features` (levels x F).
void compute_features(const HexPlaneField& field, const double pos[3], double t, double* lookups,
                      double* features) {
  const int f = field.channels();
  const double u[3] = {0.5 * (pos[0] + 1.0), 0.5 * (pos[1] + 1.0), 0.5 * (pos[2] + 1.0)};
  for (int level = 0; level < field.num_levels(); ++level) {
    double* feat = features + level * f;
    std::fill(feat, feat + f, 1.0);
    for (int p = 0; p < kPlanesPerLevel; ++p) {
      const PlaneAxes a = kAllPlaneAxes[p];
      const auto [ca, cb] = plane_coords(a, u, t);
      double* q = lookups + (level * kPlanesPerLevel + p) * f;
      query_plane(field.plane(level, a), ca, cb, std::span<double>(q, f));
      for (int c = 0; c < f; ++c) feat[c] *= q[c];
    }
  }
}

}  // namespace

std::vector<double> field_features(const HexPlaneField& field, double x, double y, double z,
                                   double t) {
  const int f = field.channels();
  std::vector<double> lookups(static_cast<std::size_t>(field.num_levels()) * kPlanesPerLevel * f);
  std::vector<double> features(field.feature_dim());
  const double pos[3] = {x, y, z};
  compute_features(field, pos, t, lookups.data(), features.data());
  return features;
}

std::vector<double> deformation_offsets(const HexPlaneField& field, const GaussianSet& set,
                                        double t) {
  const std::size_t n = set.size();
  const int d = field.feature_dim();
  const int f = field.channels();
  std::vector<double> features(static_cast<std::size_t>(d) * n);
  const auto pos = set.positions();
#pragma omp parallel
  {
    std::vector<double> lookups(static_cast<std::size_t>(field.num_levels()) * kPlanesPerLevel *
                                f);
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
      compute_features(field, &pos[3 * i], t, lookups.data(), &features[d * i]);
  }
  return field.mlp().forward(features, n);
}

std::vector<double> deform(const HexPlaneField& field, const GaussianSet& set, double t) {
  std::vector<double> out = deformation_offsets(field, set, t);
  const auto pos = set.positions();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += pos[i];
  return out;
}

void deform_backward(const HexPlaneField& field, const GaussianSet& set, double t,
                     std::span<const double> d_deformed, FieldGradients& d_field,
                     std::span<double> d_positions) {
  const std::size_t n = set.size();
  if (d_deformed.size() != 3 * n || d_positions.size() != 3 * n)
    throw ParameterError("deform_backward: gradient buffers must be 3 * set size");
  const int d = field.feature_dim();
  const int f = field.channels();
  const int levels = field.num_levels();
  const std::size_t lookup_stride = static_cast<std::size_t>(levels) * kPlanesPerLevel * f;
  const auto pos = set.positions();

  std::vector<double> lookups(lookup_stride * n);
  std::vector<double> features(static_cast<std::size_t>(d) * n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
    compute_features(field, &pos[3 * i], t, &lookups[lookup_stride * i], &features[d * i]);

  std::vector<double> d_features(static_cast<std::size_t>(d) * n);
  field.mlp().backward(features, n, d_deformed, d_field.mlp, d_features);

  // Plane scatter runs in Gaussian order so the accumulation is reproducible.
  std::vector<double> d_lookup(f);
  std::vector<double> prefix(kPlanesPerLevel + 1), suffix(kPlanesPerLevel + 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double* p = &pos[3 * i];
    const double u[3] = {0.5 * (p[0] + 1.0), 0.5 * (p[1] + 1.0), 0.5 * (p[2] + 1.0)};
    double d_u[3] = {0, 0, 0};
    for (int level = 0; level < levels; ++level) {
      const double* df = &d_features[d * i + level * f];
      const double* q = &lookups[lookup_stride * i + level * kPlanesPerLevel * f];
      for (int pi = 0; pi < kPlanesPerLevel; ++pi) {
        const PlaneAxes a = kAllPlaneAxes[pi];
        for (int c = 0; c < f; ++c) {
          // Product of the other five lookups without dividing.
          double others = 1.0;
          for (int pj = 0; pj < kPlanesPerLevel; ++pj)
            if (pj != pi) others *= q[pj * f + c];
          d_lookup[c] = df[c] * others;
        }
        const auto [ca, cb] = plane_coords(a, u, t);
        double da = 0, db = 0;
        query_plane_backward(field.plane(level, a), ca, cb, d_lookup,
                             d_field.planes[level * kPlanesPerLevel + pi], &da, &db);
        const auto [ax, bx] = plane_spatial_axes(a);
        d_u[ax] += da;
        if (bx >= 0) d_u[bx] += db;
      }
    }
    for (int k = 0; k < 3; ++k) d_positions[3 * i + k] += d_deformed[3 * i + k] + 0.5 * d_u[k];
  }
}

}  // namespace gs4d
