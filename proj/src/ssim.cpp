// Copyright 2026 The gs4d Authors
// SPDX-License-Identifier: Apache-2.0

#include "gs4d/ssim.hpp"

#include <array>
#include <cmath>
#include <vector>

#include "gs4d/error.hpp"

namespace gs4d {
namespace {

constexpr int kRadius = kSsimWindow / 2;

std::array<double, kSsimWindow> window_weights() {
  std::array<double, kSsimWindow> w{};
  double sum = 0;
  for (int k = 0; k < kSsimWindow; ++k) {
    const double d = k - kRadius;
    w[k] = std::exp(-d * d / (2 * kSsimSigma * kSsimSigma));
    sum += w[k];
  }
  for (double& v : w) v /= sum;
  return w;
}

// Valid-mode separable filter of an h x w plane; output (h-10) x (w-10).
void filter_valid(const std::vector<double>& in, int h, int w, std::vector<double>& out) {
  static const auto g = window_weights();
  const int ow = w - 2 * kRadius, oh = h - 2 * kRadius;
  std::vector<double> tmp(static_cast<std::size_t>(h) * ow);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0;
      const double* row = &in[static_cast<std::size_t>(y) * w + x];
      for (int k = 0; k < kSsimWindow; ++k) s += g[k] * row[k];
      tmp[static_cast<std::size_t>(y) * ow + x] = s;
    }
  out.assign(static_cast<std::size_t>(oh) * ow, 0.0);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0;
      for (int k = 0; k < kSsimWindow; ++k) s += g[k] * tmp[static_cast<std::size_t>(y + k) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = s;
    }
}

// Adjoint of filter_valid: scatters an (h-10) x (w-10) map back to h x w.
void filter_valid_adjoint(const std::vector<double>& in, int h, int w, std::vector<double>& out) {
  static const auto g = window_weights();
  const int ow = w - 2 * kRadius, oh = h - 2 * kRadius;
  std::vector<double> tmp(static_cast<std::size_t>(h) * ow, 0.0);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      const double v = in[static_cast<std::size_t>(y) * ow + x];
      for (int k = 0; k < kSsimWindow; ++k) tmp[static_cast<std::size_t>(y + k) * ow + x] += g[k] * v;
    }
  out.assign(static_cast<std::size_t>(h) * w, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      const double v = tmp[static_cast<std::size_t>(y) * ow + x];
      double* row = &out[static_cast<std::size_t>(y) * w + x];
      for (int k = 0; k < kSsimWindow; ++k) row[k] += g[k] * v;
    }
}

}  // namespace

double ssim_with_grad(const Image& a, const Image& b, const Image* mask, Image* d_a,
                      double scale) {
  if (!a.same_shape(b)) throw ParameterError("ssim: image shapes differ");
  if (a.width < kSsimWindow || a.height < kSsimWindow)
    throw ParameterError("ssim: image smaller than the 11x11 window");
  if (mask && (mask->width != a.width || mask->height != a.height || mask->channels != 1))
    throw ParameterError("ssim: mask must be H x W x 1");
  if (d_a && !d_a->same_shape(a)) throw ParameterError("ssim: gradient shape differs");

  const int w = a.width, h = a.height, ch = a.channels;
  const int ow = w - 2 * kRadius, oh = h - 2 * kRadius;
  const std::size_t n = static_cast<std::size_t>(w) * h;
  const std::size_t on = static_cast<std::size_t>(ow) * oh;
  const double c1 = kSsimK1 * kSsimK1, c2 = kSsimK2 * kSsimK2;

  std::vector<double> weight(on, 1.0);
  double weight_sum = static_cast<double>(on);
  if (mask) {
    weight_sum = 0;
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        const double m = mask->at(x + kRadius, y + kRadius, 0);
        weight[static_cast<std::size_t>(y) * ow + x] = m;
        weight_sum += m;
      }
    if (weight_sum <= 0) return 1.0;
  }
  const double norm = 1.0 / (weight_sum * ch);

  std::vector<double> pa(n), pb(n), paa(n), pbb(n), pab(n);
  std::vector<double> mu_a, mu_b, s_aa, s_bb, s_ab;
  std::vector<double> g1(on), g2(on), g3(on), m1, m2, m3;
  double total = 0;
  for (int c = 0; c < ch; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      const double va = a.data[i * ch + c], vb = b.data[i * ch + c];
      pa[i] = va;
      pb[i] = vb;
      paa[i] = va * va;
      pbb[i] = vb * vb;
      pab[i] = va * vb;
    }
    filter_valid(pa, h, w, mu_a);
    filter_valid(pb, h, w, mu_b);
    filter_valid(paa, h, w, s_aa);
    filter_valid(pbb, h, w, s_bb);
    filter_valid(pab, h, w, s_ab);
    double channel_total = 0;
    for (std::size_t p = 0; p < on; ++p) {
      const double ma = mu_a[p], mb = mu_b[p];
      const double var_a = s_aa[p] - ma * ma, var_b = s_bb[p] - mb * mb, cov = s_ab[p] - ma * mb;
      const double a1 = 2 * ma * mb + c1, a2 = 2 * cov + c2;
      const double b1 = ma * ma + mb * mb + c1, b2 = var_a + var_b + c2;
      const double s = (a1 * a2) / (b1 * b2);
      channel_total += weight[p] * s;
      if (d_a) {
        const double up = scale * norm * weight[p];
        const double inv = 1.0 / (b1 * b2);
        // Partials w.r.t. mu_a, E[a^2] and E[ab].
        g1[p] = up * ((2 * mb * a2 - 2 * mb * a1) * inv - s * (2 * ma / b1 - 2 * ma / b2));
        g2[p] = up * (-s / b2);
        g3[p] = up * (2 * a1 * inv);
      }
    }
    // Summed per channel so that identical images give exactly 1.
    total += channel_total;
    if (d_a) {
      filter_valid_adjoint(g1, h, w, m1);
      filter_valid_adjoint(g2, h, w, m2);
      filter_valid_adjoint(g3, h, w, m3);
      for (std::size_t i = 0; i < n; ++i)
        d_a->data[i * ch + c] += m1[i] + 2 * pa[i] * m2[i] + pb[i] * m3[i];
    }
  }
  return total / (weight_sum * ch);
}

double ssim(const Image& a, const Image& b) { return ssim_with_grad(a, b, nullptr, nullptr); }

}  // namespace gs4d
