// Copyright 2026 The gs4d Authors
// SPDX-License-Identifier: Apache-2.0

#include "gs4d/rasterizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include <Eigen/LU>

#include "gs4d/error.hpp"

namespace gs4d {

struct RenderAccess {
  static RenderContext& ctx(RenderResult& r) { return r.context; }
  static bool& valid(RenderContext& c) { return c.valid_; }
  static std::uint64_t& hash(RenderContext& c) { return c.input_hash_; }
  static std::uint64_t hash(const RenderContext& c) { return c.input_hash_; }
  static std::size_t& count(RenderContext& c) { return c.gaussian_count_; }
  static Camera& camera(RenderContext& c) { return c.camera_; }
  static const Camera& camera(const RenderContext& c) { return c.camera_; }
  static Vec3& background(RenderContext& c) { return c.background_; }
  static const Vec3& background(const RenderContext& c) { return c.background_; }
  static std::vector<Splat2D>& splats(RenderContext& c) { return c.splats_; }
  static std::vector<std::int32_t>& slots(RenderContext& c) { return c.slot_of_gaussian_; }
  static std::vector<Vec3>& cam_points(RenderContext& c) { return c.cam_points_; }
  static const std::vector<Vec3>& cam_points(const RenderContext& c) { return c.cam_points_; }
  static int& tiles_x(RenderContext& c) { return c.tiles_x_; }
  static int& tiles_y(RenderContext& c) { return c.tiles_y_; }
  static std::vector<std::size_t>& offsets(RenderContext& c) { return c.tile_offsets_; }
  static std::vector<std::uint32_t>& entries(RenderContext& c) { return c.tile_entries_; }
};

void GaussianGradients::resize(std::size_t n) {
  position.assign(3 * n, 0.0);
  rotation.assign(4 * n, 0.0);
  log_scale.assign(3 * n, 0.0);
  opacity_logit.assign(n, 0.0);
  color.assign(3 * n, 0.0);
  screen_grad_norm.assign(n, 0.0);
}

void GaussianGradients::set_zero() { resize(size()); }

void GaussianGradients::add(const GaussianGradients& o, double scale) {
  if (o.size() != size()) throw ParameterError("GaussianGradients::add: size mismatch");
  auto axpy = [scale](std::vector<double>& y, const std::vector<double>& x) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += scale * x[i];
  };
  axpy(position, o.position);
  axpy(rotation, o.rotation);
  axpy(log_scale, o.log_scale);
  axpy(opacity_logit, o.opacity_logit);
  axpy(color, o.color);
}

namespace {

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t bytes) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ull;
  }
  return h;
}

std::uint64_t hash_inputs(const GaussianSet& set, std::span<const double> pos, const Camera& cam,
                          const Vec3& bg) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  auto mix = [&h](std::span<const double> v) { h = fnv1a(h, v.data(), v.size_bytes()); };
  mix(set.rotations());
  mix(set.log_scales());
  mix(set.opacity_logits());
  mix(set.colors());
  mix(pos);
  const double cam_vals[6] = {cam.fx, cam.fy, cam.cx, cam.cy, double(cam.width),
                              double(cam.height)};
  h = fnv1a(h, cam_vals, sizeof cam_vals);
  h = fnv1a(h, cam.world_to_cam.data(), sizeof(double) * 16);
  h = fnv1a(h, bg.data(), sizeof(double) * 3);
  return h;
}

// Per-splat data laid out for the inner compositing loop.
struct PackedSplat {
  double mx, my;
  double ca, cb, cc;  // conic [[ca, cb], [cb, cc]]
  double opacity;
  double r, g, b;
};

struct Contribution {
  std::uint32_t local;  // index within the tile list
  double dx, dy;
  double g;      // exp(power)
  double sigma;  // opacity * g
  double trans;  // transmittance in front of this splat
};

inline bool evaluate(const PackedSplat& s, double px, double py, double& dx, double& dy, double& g,
                     double& sigma) {
  dx = px - s.mx;
  dy = py - s.my;
  const double maha = s.ca * dx * dx + 2.0 * s.cb * dx * dy + s.cc * dy * dy;
  if (maha > kExtentSigmas * kExtentSigmas) return false;
  g = std::exp(-0.5 * maha);
  sigma = s.opacity * g;
  return sigma >= kMinContribution;
}

void check_inputs(const GaussianSet& set, std::span<const double> pos) {
  if (pos.size() != 3 * set.size())
    throw ParameterError("render: deformed_positions length must be 3 * set size");
}

}  // namespace

RenderResult render(const GaussianSet& set, std::span<const double> pos, const Camera& cam,
                    const Vec3& background) {
  check_inputs(set, pos);
  cam.validate();
  const std::size_t n = set.size();
  const int width = cam.width, height = cam.height;

  RenderResult result;
  RenderContext& ctx = RenderAccess::ctx(result);
  RenderAccess::camera(ctx) = cam;
  RenderAccess::background(ctx) = background;
  RenderAccess::count(ctx) = n;
  RenderAccess::hash(ctx) = hash_inputs(set, pos, cam, background);

  const int tiles_x = (width + kTileSize - 1) / kTileSize;
  const int tiles_y = (height + kTileSize - 1) / kTileSize;
  RenderAccess::tiles_x(ctx) = tiles_x;
  RenderAccess::tiles_y(ctx) = tiles_y;

  // Project every Gaussian; slot -1 marks culled ones.
  std::vector<Splat2D> projected(n);
  std::vector<Vec3> cam_pts(n);
  std::vector<char> visible(n, 0);
  const Mat3 w = cam.rotation();
  const Vec3 t = cam.translation();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
    const std::size_t i = static_cast<std::size_t>(ii);
    const Vec3 mu(pos[3 * i], pos[3 * i + 1], pos[3 * i + 2]);
    const Vec3 p = w * mu + t;
    if (!(p.z() > kNearPlane)) continue;
    const Mat3 sigma3 = covariance_from_params(set.rotation(i), set.log_scale(i));
    const Eigen::Matrix<double, 2, 3> jw = projection_jacobian(cam, p) * w;
    Mat2 cov = jw * sigma3 * jw.transpose();
    cov(0, 1) = cov(1, 0) = 0.5 * (cov(0, 1) + cov(1, 0));
    cov.diagonal().array() += kLowPassVariance;
    const double det = cov.determinant();
    if (!(det > 0)) continue;
    Splat2D& s = projected[i];
    s.gaussian_index = static_cast<std::uint32_t>(i);
    s.mean2d = Vec2(cam.fx * p.x() / p.z() + cam.cx, cam.fy * p.y() / p.z() + cam.cy);
    s.cov2d = cov;
    s.conic << cov(1, 1) / det, -cov(0, 1) / det, -cov(0, 1) / det, cov(0, 0) / det;
    s.depth = p.z();
    s.opacity = sigmoid(set.opacity_logit(i));
    s.color = set.color(i);
    const double rx = kExtentSigmas * std::sqrt(cov(0, 0));
    const double ry = kExtentSigmas * std::sqrt(cov(1, 1));
    if (s.mean2d.x() + rx < 0 || s.mean2d.x() - rx > width - 1 || s.mean2d.y() + ry < 0 ||
        s.mean2d.y() - ry > height - 1)
      continue;
    s.tile_x0 = std::clamp(static_cast<int>(std::floor((s.mean2d.x() - rx) / kTileSize)), 0,
                           tiles_x - 1);
    s.tile_x1 = std::clamp(static_cast<int>(std::floor((s.mean2d.x() + rx) / kTileSize)), 0,
                           tiles_x - 1);
    s.tile_y0 = std::clamp(static_cast<int>(std::floor((s.mean2d.y() - ry) / kTileSize)), 0,
                           tiles_y - 1);
    s.tile_y1 = std::clamp(static_cast<int>(std::floor((s.mean2d.y() + ry) / kTileSize)), 0,
                           tiles_y - 1);
    cam_pts[i] = p;
    visible[i] = 1;
  }

  auto& splats = RenderAccess::splats(ctx);
  auto& slots = RenderAccess::slots(ctx);
  auto& cpts = RenderAccess::cam_points(ctx);
  slots.assign(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    if (!visible[i]) continue;
    slots[i] = static_cast<std::int32_t>(splats.size());
    splats.push_back(projected[i]);
    cpts.push_back(cam_pts[i]);
  }

  // Bin into tiles (counting pass, then fill), then depth-sort each tile.
  const int num_tiles = tiles_x * tiles_y;
  auto& offsets = RenderAccess::offsets(ctx);
  auto& entries = RenderAccess::entries(ctx);
  offsets.assign(num_tiles + 1, 0);
  for (const Splat2D& s : splats)
    for (int ty = s.tile_y0; ty <= s.tile_y1; ++ty)
      for (int tx = s.tile_x0; tx <= s.tile_x1; ++tx) ++offsets[ty * tiles_x + tx + 1];
  for (int k = 0; k < num_tiles; ++k) offsets[k + 1] += offsets[k];
  entries.resize(offsets[num_tiles]);
  {
    std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
    for (std::uint32_t slot = 0; slot < splats.size(); ++slot) {
      const Splat2D& s = splats[slot];
      for (int ty = s.tile_y0; ty <= s.tile_y1; ++ty)
        for (int tx = s.tile_x0; tx <= s.tile_x1; ++tx) entries[cursor[ty * tiles_x + tx]++] = slot;
    }
  }
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < num_tiles; ++k) {
    std::stable_sort(entries.begin() + offsets[k], entries.begin() + offsets[k + 1],
                     [&splats](std::uint32_t a, std::uint32_t b) {
                       if (splats[a].depth != splats[b].depth)
                         return splats[a].depth < splats[b].depth;
                       return splats[a].gaussian_index < splats[b].gaussian_index;
                     });
  }

  RenderOutput& out = result.output;
  out.color = Image(width, height, 3);
  out.alpha = Image(width, height, 1);
  out.contributors.assign(static_cast<std::size_t>(width) * height, 0);

#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < num_tiles; ++k) {
    const int tx = k % tiles_x, ty = k / tiles_x;
    const std::span<const std::uint32_t> list(entries.data() + offsets[k],
                                              offsets[k + 1] - offsets[k]);
    std::vector<PackedSplat> packed(list.size());
    for (std::size_t e = 0; e < list.size(); ++e) {
      const Splat2D& s = splats[list[e]];
      packed[e] = {s.mean2d.x(), s.mean2d.y(), s.conic(0, 0), s.conic(0, 1), s.conic(1, 1),
                   s.opacity,    s.color.x(),  s.color.y(),   s.color.z()};
    }
    const int x_end = std::min(width, (tx + 1) * kTileSize);
    const int y_end = std::min(height, (ty + 1) * kTileSize);
    for (int py = ty * kTileSize; py < y_end; ++py) {
      for (int px = tx * kTileSize; px < x_end; ++px) {
        double trans = 1.0, cr = 0, cg = 0, cb = 0;
        std::uint32_t used = 0;
        for (const PackedSplat& s : packed) {
          double dx, dy, g, sigma;
          if (!evaluate(s, px, py, dx, dy, g, sigma)) continue;
          const double wgt = sigma * trans;
          cr += s.r * wgt;
          cg += s.g * wgt;
          cb += s.b * wgt;
          trans *= 1.0 - sigma;
          ++used;
          if (trans < kTransmittanceEpsilon) break;
        }
        const std::size_t pix = static_cast<std::size_t>(py) * width + px;
        out.color.data[3 * pix + 0] = cr + trans * background.x();
        out.color.data[3 * pix + 1] = cg + trans * background.y();
        out.color.data[3 * pix + 2] = cb + trans * background.z();
        out.alpha.data[pix] = 1.0 - trans;
        out.contributors[pix] = used;
      }
    }
  }

  RenderAccess::valid(ctx) = true;
  return result;
}

namespace {

// Per tile-entry gradient w.r.t. the 2D splat quantities.
struct SplatGrad2D {
  double mx = 0, my = 0;
  double ca = 0, cb = 0, cc = 0;  // cb is the shared off-diagonal element
  double opacity = 0;
  double r = 0, g = 0, b = 0;
};

}  // namespace

GaussianGradients render_backward(const RenderContext& ctx, const GaussianSet& set,
                                  std::span<const double> pos, const Image& d_color) {
  if (!ctx.valid()) throw ContractError("render_backward: context is not from a render");
  const Camera& cam = RenderAccess::camera(ctx);
  if (ctx.gaussian_count() != set.size() || pos.size() != 3 * set.size())
    throw ContractError("render_backward: Gaussian count differs from the forward pass");
  if (RenderAccess::hash(ctx) != hash_inputs(set, pos, cam, RenderAccess::background(ctx)))
    throw ContractError("render_backward: inputs differ from the forward pass (stale context)");
  if (d_color.width != cam.width || d_color.height != cam.height || d_color.channels != 3)
    throw ContractError("render_backward: dL/dColor shape differs from the render");

  const int width = cam.width, height = cam.height;
  const Vec3 bg = RenderAccess::background(ctx);
  const auto& splats = ctx.splats();
  const int tiles_x = ctx.tiles_x();
  const int num_tiles = ctx.tiles_x() * ctx.tiles_y();

  // Each tile accumulates into its own slice; slices are merged in tile order, which
  // makes the result independent of thread scheduling.
  std::vector<std::size_t> base(num_tiles + 1, 0);
  for (int k = 0; k < num_tiles; ++k) base[k + 1] = base[k] + ctx.tile_list(k).size();
  std::vector<SplatGrad2D> tile_grads(base[num_tiles]);

#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < num_tiles; ++k) {
    const int tx = k % tiles_x, ty = k / tiles_x;
    const auto list = ctx.tile_list(k);
    if (list.empty()) continue;
    std::vector<PackedSplat> packed(list.size());
    for (std::size_t e = 0; e < list.size(); ++e) {
      const Splat2D& s = splats[list[e]];
      packed[e] = {s.mean2d.x(), s.mean2d.y(), s.conic(0, 0), s.conic(0, 1), s.conic(1, 1),
                   s.opacity,    s.color.x(),  s.color.y(),   s.color.z()};
    }
    SplatGrad2D* grads = tile_grads.data() + base[k];
    std::vector<Contribution> stack;
    stack.reserve(list.size());
    const int x_end = std::min(width, (tx + 1) * kTileSize);
    const int y_end = std::min(height, (ty + 1) * kTileSize);
    for (int py = ty * kTileSize; py < y_end; ++py) {
      for (int px = tx * kTileSize; px < x_end; ++px) {
        const std::size_t pix = static_cast<std::size_t>(py) * width + px;
        const double gr = d_color.data[3 * pix], gg = d_color.data[3 * pix + 1],
                     gb = d_color.data[3 * pix + 2];
        if (gr == 0 && gg == 0 && gb == 0) continue;
        stack.clear();
        double trans = 1.0;
        for (std::uint32_t e = 0; e < packed.size(); ++e) {
          Contribution c;
          if (!evaluate(packed[e], px, py, c.dx, c.dy, c.g, c.sigma)) continue;
          c.local = e;
          c.trans = trans;
          stack.push_back(c);
          trans *= 1.0 - c.sigma;
          if (trans < kTransmittanceEpsilon) break;
        }
        // Back to front; (ar, ag, ab) is the color seen just behind the current splat.
        double ar = bg.x(), ag = bg.y(), ab = bg.z();
        for (auto it = stack.rbegin(); it != stack.rend(); ++it) {
          const PackedSplat& s = packed[it->local];
          SplatGrad2D& out = grads[it->local];
          const double wgt = it->sigma * it->trans;
          out.r += gr * wgt;
          out.g += gg * wgt;
          out.b += gb * wgt;
          const double d_sigma =
              it->trans * (gr * (s.r - ar) + gg * (s.g - ag) + gb * (s.b - ab));
          out.opacity += d_sigma * it->g;
          // sigma = opacity * exp(power), power = -1/2 d^T Q d
          const double d_power = d_sigma * it->sigma;
          out.ca += -0.5 * d_power * it->dx * it->dx;
          out.cb += -d_power * it->dx * it->dy;
          out.cc += -0.5 * d_power * it->dy * it->dy;
          out.mx += d_power * (s.ca * it->dx + s.cb * it->dy);
          out.my += d_power * (s.cb * it->dx + s.cc * it->dy);
          ar = s.r * it->sigma + (1.0 - it->sigma) * ar;
          ag = s.g * it->sigma + (1.0 - it->sigma) * ag;
          ab = s.b * it->sigma + (1.0 - it->sigma) * ab;
        }
      }
    }
  }

  std::vector<SplatGrad2D> per_splat(splats.size());
  for (int k = 0; k < num_tiles; ++k) {
    const auto list = ctx.tile_list(k);
    for (std::size_t e = 0; e < list.size(); ++e) {
      const SplatGrad2D& src = tile_grads[base[k] + e];
      SplatGrad2D& dst = per_splat[list[e]];
      dst.mx += src.mx;
      dst.my += src.my;
      dst.ca += src.ca;
      dst.cb += src.cb;
      dst.cc += src.cc;
      dst.opacity += src.opacity;
      dst.r += src.r;
      dst.g += src.g;
      dst.b += src.b;
    }
  }

  GaussianGradients out(set.size());
  const Mat3 w = cam.rotation();
  const auto& cam_pts = RenderAccess::cam_points(ctx);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t si = 0; si < static_cast<std::ptrdiff_t>(splats.size()); ++si) {
    const Splat2D& s = splats[si];
    const SplatGrad2D& g2 = per_splat[si];
    const std::size_t i = s.gaussian_index;

    out.color[3 * i + 0] = g2.r;
    out.color[3 * i + 1] = g2.g;
    out.color[3 * i + 2] = g2.b;
    out.opacity_logit[i] = g2.opacity * s.opacity * (1.0 - s.opacity);
    out.screen_grad_norm[i] = std::hypot(g2.mx * 0.5 * width, g2.my * 0.5 * height);

    // Conic -> 2D covariance: dL/dSigma = -Q dL/dQ Q.
    Mat2 d_conic;
    d_conic << g2.ca, 0.5 * g2.cb, 0.5 * g2.cb, g2.cc;
    const Mat2 d_cov2 = -s.conic * d_conic * s.conic;

    const Vec3& p = cam_pts[si];
    const Eigen::Matrix<double, 2, 3> jac = projection_jacobian(cam, p);
    const Eigen::Matrix<double, 2, 3> tw = jac * w;
    const Vec4 q = set.rotation(i);
    const Vec3 ls = set.log_scale(i);
    const Mat3 rot = quaternion_to_rotation(q);
    const Vec3 var = (2.0 * ls).array().exp();
    const Mat3 sigma3 = rot * var.asDiagonal() * rot.transpose();

    const Mat3 d_sigma3 = tw.transpose() * d_cov2 * tw;
    const Eigen::Matrix<double, 2, 3> d_tw = 2.0 * d_cov2 * tw * sigma3;
    const Eigen::Matrix<double, 2, 3> d_jac = d_tw * w.transpose();

    const double iz = 1.0 / p.z(), iz2 = iz * iz, iz3 = iz2 * iz;
    Vec3 d_p;
    d_p.x() = d_jac(0, 2) * (-cam.fx * iz2) + g2.mx * cam.fx * iz;
    d_p.y() = d_jac(1, 2) * (-cam.fy * iz2) + g2.my * cam.fy * iz;
    d_p.z() = d_jac(0, 0) * (-cam.fx * iz2) + d_jac(0, 2) * (2.0 * cam.fx * p.x() * iz3) +
              d_jac(1, 1) * (-cam.fy * iz2) + d_jac(1, 2) * (2.0 * cam.fy * p.y() * iz3) -
              g2.mx * cam.fx * p.x() * iz2 - g2.my * cam.fy * p.y() * iz2;
    const Vec3 d_mu = w.transpose() * d_p;
    out.position[3 * i + 0] = d_mu.x();
    out.position[3 * i + 1] = d_mu.y();
    out.position[3 * i + 2] = d_mu.z();

    // Sigma = R D R^T
    const Mat3 d_rot = 2.0 * d_sigma3 * rot * var.asDiagonal();
    const Mat3 local = rot.transpose() * d_sigma3 * rot;
    for (int a = 0; a < 3; ++a) out.log_scale[3 * i + a] = 2.0 * var[a] * local(a, a);
    const Vec4 dq = quaternion_to_rotation_vjp(q, d_rot);
    for (int a = 0; a < 4; ++a) out.rotation[4 * i + a] = dq[a];
  }
  return out;
}

}  // namespace gs4d
