// Copyright 2026 The gs4d Authors
// SPDX-License-Identifier: Apache-2.0

#include "gs4d/losses.hpp"

#include <atomic>
#include <cmath>
#include <iostream>
#include <numbers>

#include "gs4d/error.hpp"
#include "gs4d/rng.hpp"
#include "gs4d/ssim.hpp"

namespace gs4d {

void LossWeights::validate() const {
  const std::pair<const char*, double> all[] = {
      {"tv", tv}, {"sds", sds}, {"pseudo", pseudo}, {"consistency", consistency},
      {"smooth", smooth}};
  for (const auto& [name, v] : all)
    if (!std::isfinite(v) || v < 0)
      throw ParameterError(std::string("loss weight ") + name + " must be finite and >= 0");
}

// ---------------------------------------------------------------------------
// Plane regularizers

double tv_loss(const FeaturePlane& p, std::span<double> grad, double scale) {
  if (!grad.empty() && grad.size() != p.size())
    throw ParameterError("tv_loss: gradient size differs from plane");
  const double norm = 1.0 / (static_cast<double>(p.channels) * p.rows * p.cols);
  const int f = p.channels;
  double sum = 0;
  for (int r = 0; r < p.rows; ++r)
    for (int c = 0; c < p.cols; ++c) {
      const std::size_t base = (static_cast<std::size_t>(r) * p.cols + c) * f;
      for (int k = 0; k < f; ++k) {
        const double v = p.values[base + k];
        if (r > 0) {
          const std::size_t up = base - static_cast<std::size_t>(p.cols) * f + k;
          const double d = v - p.values[up];
          sum += d * d;
          if (!grad.empty()) {
            grad[base + k] += scale * norm * 2 * d;
            grad[up] -= scale * norm * 2 * d;
          }
        }
        if (c > 0) {
          const std::size_t left = base - f + k;
          const double d = v - p.values[left];
          sum += d * d;
          if (!grad.empty()) {
            grad[base + k] += scale * norm * 2 * d;
            grad[left] -= scale * norm * 2 * d;
          }
        }
      }
    }
  return sum * norm;
}

double tv_loss(const HexPlaneField& field, FieldGradients* grad, double scale) {
  double sum = 0;
  const auto& planes = field.planes();
  for (std::size_t i = 0; i < planes.size(); ++i)
    sum += tv_loss(planes[i], grad ? std::span<double>(grad->planes[i]) : std::span<double>(),
                   scale);
  return sum;
}

double smooth_loss(const FeaturePlane& p, std::span<double> grad, double scale) {
  if (!grad.empty() && grad.size() != p.size())
    throw ParameterError("smooth_loss: gradient size differs from plane");
  if (p.cols < 3) return 0.0;
  const double norm = 1.0 / (static_cast<double>(p.channels) * p.rows * p.cols);
  const int f = p.channels;
  double sum = 0;
  for (int r = 0; r < p.rows; ++r)
    for (int c = 1; c + 1 < p.cols; ++c) {
      const std::size_t mid = (static_cast<std::size_t>(r) * p.cols + c) * f;
      for (int k = 0; k < f; ++k) {
        const double d = p.values[mid - f + k] - 2 * p.values[mid + k] + p.values[mid + f + k];
        sum += d * d;
        if (!grad.empty()) {
          const double g = scale * norm * 2 * d;
          grad[mid - f + k] += g;
          grad[mid + k] -= 2 * g;
          grad[mid + f + k] += g;
        }
      }
    }
  return sum * norm;
}

double smooth_loss(const HexPlaneField& field, FieldGradients* grad, double scale) {
  static std::atomic<bool> warned{false};
  double sum = 0;
  const auto& planes = field.planes();
  for (std::size_t i = 0; i < planes.size(); ++i) {
    if (!is_time_plane(planes[i].axes)) continue;
    if (planes[i].cols < 3 && !warned.exchange(true))
      std::cerr << "warning: time resolution " << planes[i].cols
                << " < 3, smoothness term is zero\n";
    sum += smooth_loss(planes[i], grad ? std::span<double>(grad->planes[i]) : std::span<double>(),
                       scale);
  }
  return sum;
}

// ---------------------------------------------------------------------------
// Photometric terms

double recon_loss(const Image& render, const Image& reference, const Image* mask,
                  const ReconMetric& metric, Image* grad, double scale) {
  if (!render.same_shape(reference)) throw ParameterError("recon_loss: image shapes differ");
  if (mask && (mask->width != render.width || mask->height != render.height ||
               mask->channels != 1))
    throw ParameterError("recon_loss: mask must be H x W x 1");
  if (grad && !grad->same_shape(render)) throw ParameterError("recon_loss: gradient shape differs");

  const int ch = render.channels;
  const std::size_t n = render.pixel_count();
  double weight_sum = 0;
  double l1 = 0;
  for (std::size_t p = 0; p < n; ++p) {
    const double m = mask ? mask->data[p] : 1.0;
    weight_sum += m;
    for (int c = 0; c < ch; ++c) l1 += m * std::abs(render.data[p * ch + c] - reference.data[p * ch + c]);
  }
  double loss = 0;
  if (weight_sum > 0 && metric.l1 != 0) {
    const double norm = 1.0 / (weight_sum * ch);
    loss += metric.l1 * l1 * norm;
    if (grad) {
      for (std::size_t p = 0; p < n; ++p) {
        const double m = mask ? mask->data[p] : 1.0;
        for (int c = 0; c < ch; ++c) {
          const double d = render.data[p * ch + c] - reference.data[p * ch + c];
          const double s = d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);
          grad->data[p * ch + c] += scale * metric.l1 * norm * m * s;
        }
      }
    }
  }
  if (metric.dssim != 0) {
    const double s = ssim_with_grad(render, reference, mask, grad, -scale * metric.dssim);
    loss += metric.dssim * (1.0 - s);
  }
  return loss;
}

double pseudo_loss(std::span<const Image> renders, std::span<const Image> labels,
                   std::span<const Image* const> masks, const ReconMetric& metric,
                   std::span<Image> grads, double scale) {
  if (renders.empty() || renders.size() != labels.size())
    throw ParameterError("pseudo_loss: need one render per labeled view");
  if (!masks.empty() && masks.size() != renders.size())
    throw ParameterError("pseudo_loss: mask count differs from view count");
  if (!grads.empty() && grads.size() != renders.size())
    throw ParameterError("pseudo_loss: gradient count differs from view count");
  const double inv = 1.0 / static_cast<double>(renders.size());
  double sum = 0;
  for (std::size_t v = 0; v < renders.size(); ++v)
    sum += recon_loss(renders[v], labels[v], masks.empty() ? nullptr : masks[v], metric,
                      grads.empty() ? nullptr : &grads[v], scale * inv);
  return sum * inv;
}

// ---------------------------------------------------------------------------
// Score distillation

double NoiseSchedule::alpha_bar(int t) const {
  if (steps < 1 || t < 0 || t > steps) throw ParameterError("alpha_bar: noise level out of range");
  auto f = [&](double tt) {
    const double c = std::cos((tt / steps + offset) / (1 + offset) * std::numbers::pi / 2);
    return c * c;
  };
  return f(t) / f(0);
}

Image sds_noise(int width, int height, int channels, std::uint64_t seed) {
  Image eps(width, height, channels);
  CounterRng rng(seed, /*stream=*/0x5d5);
  for (double& v : eps.data) v = rng.normal();
  return eps;
}

SdsResult sds_inject(Prior& prior, const Image& render, PriorCondition condition,
                     int noise_level, std::uint64_t seed, const NoiseSchedule& schedule,
                     double weight) {
  if (noise_level < schedule.t_min || noise_level > schedule.t_max)
    throw ParameterError("sds_inject: noise level outside [t_min, t_max]");
  const double ab = schedule.alpha_bar(noise_level);
  const Image eps = sds_noise(render.width, render.height, render.channels, seed);
  Image x_t(render.width, render.height, render.channels);
  const double sa = std::sqrt(ab), sb = std::sqrt(1.0 - ab);
  for (std::size_t i = 0; i < x_t.size(); ++i) x_t.data[i] = sa * render.data[i] + sb * eps.data[i];

  condition.clean_render = &render;
  condition.alpha_bar = ab;
  const Image eps_hat = prior.predict_noise(x_t, noise_level, condition);
  if (!eps_hat.same_shape(render)) throw ProtocolError("prior output shape differs from input");

  SdsResult out;
  out.noise_level = noise_level;
  out.gradient = Image(render.width, render.height, render.channels);
  double sq = 0;
  for (std::size_t i = 0; i < eps_hat.size(); ++i) {
    if (!std::isfinite(eps_hat.data[i])) throw NumericalError("prior returned non-finite noise");
    const double g = weight * (eps_hat.data[i] - eps.data[i]);
    out.gradient.data[i] = g;
    sq += g * g;
  }
  out.magnitude = 0.5 * sq / static_cast<double>(std::max<std::size_t>(1, eps_hat.size()));
  return out;
}

// ---------------------------------------------------------------------------
// Totals

nlohmann::json LossReport::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : terms) j[k] = v;
  j["consistency"] = consistency;
  j["total"] = total;
  return j;
}

LossReport total_loss(const LossParts& p, const LossWeights& w) {
  const std::pair<const char*, double> parts[] = {
      {"recon", p.recon}, {"pseudo", p.pseudo}, {"tv", p.tv}, {"smooth", p.smooth}, {"sds", p.sds}};
  for (const auto& [name, v] : parts)
    if (!std::isfinite(v)) throw NumericalError(std::string("loss term ") + name + " is not finite");
  LossReport r;
  for (const auto& [name, v] : parts) r.terms[name] = v;
  r.terms["weighted_tv"] = w.tv * p.tv;
  r.terms["weighted_sds"] = w.sds * p.sds;
  r.terms["weighted_smooth"] = w.smooth * p.smooth;
  r.terms["weighted_pseudo"] = w.pseudo * p.pseudo;
  r.consistency = w.smooth * p.smooth + w.tv * p.tv + w.sds * p.sds;
  r.terms["weighted_consistency"] = w.consistency * r.consistency;
  r.total = p.recon + w.pseudo * p.pseudo + w.consistency * r.consistency;
  return r;
}

}  // namespace gs4d
