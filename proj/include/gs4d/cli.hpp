// Copyright 2026 The gs4d Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>

namespace gs4d {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// Subcommands: train-static, train-coarse, train-fine, render, eval, export.
/// Logs go to `err`; `out` receives data only when --out is "-".
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gs4d
