// Copyright 2026 The gs4d Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "gs4d/image.hpp"

namespace gs4d {

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

/// Mean single-scale SSIM over every valid (fully inside) window position and
/// channel. Throws ParameterError on shape mismatch or images smaller than the window.
double ssim(const Image& a, const Image& b);

/// Same as ssim(), optionally weighting window positions by `mask` (H x W x 1,
/// sampled at the window centre) and accumulating scale * d(result)/d(a) into *d_a.
double ssim_with_grad(const Image& a, const Image& b, const Image* mask, Image* d_a,
                      double scale = 1.0);

}  // namespace gs4d
