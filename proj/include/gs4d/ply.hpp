// Copyright 2026 The gs4d Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include "gs4d/scene.hpp"

namespace gs4d {

/// One Gaussian per vertex of an ASCII or binary little-endian PLY file. Requires
/// x, y, z; uses red/green/blue when present (uchar scaled by 1/255). Files written
/// by export_ply also restore opacity, scale_0..2 and rot_0..3.
GaussianSet init_from_ply(const std::filesystem::path& path);

/// Binary little-endian PLY: float x,y,z; uchar red,green,blue; float opacity
/// (activated); float scale_0..2 (standard deviations); float rot_0..3 (w,x,y,z).
void export_ply(const GaussianSet& set, const std::filesystem::path& path);

/// Size in bytes of one exported vertex record.
inline constexpr std::size_t kPlyVertexBytes = 3 * 4 + 3 + 4 + 3 * 4 + 4 * 4;

}  // namespace gs4d
