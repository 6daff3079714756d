// Copyright 2026 The gs4d Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>

#include "gs4d/config.hpp"
#include "gs4d/state.hpp"

namespace gs4d {

inline constexpr char kCheckpointMagic[8] = {'G', 'S', '4', 'D', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  TrainState state;
  TrainConfig config;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

/// Layout: magic, u32 version, u64 header length, JSON header (metadata plus
/// name/dtype/shape/offset of every array), raw little-endian arrays.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
/// Validates magic, version and every array shape (FormatError); short files
/// raise IoError.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace gs4d
