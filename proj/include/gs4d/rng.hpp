// Copyright 2026 The gs4d Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <limits>

namespace gs4d {

/// Counter-based generator: Philox4x32-10 keyed by `seed`, with the 128-bit
/// counter block (counter_lo, counter_hi, stream_lo, stream_hi). Each call to
/// next_u64() consumes exactly one block and returns its first two words, so
/// the full state is the triple (seed, stream, counter).
///
/// Output function version: "philox4x32-10/v1". Changing how blocks map to
/// values is a checkpoint format change.
class CounterRng {
 public:
  using result_type = std::uint64_t;
  static constexpr const char* kName = "philox4x32-10/v1";

  CounterRng() = default;
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0, std::uint64_t counter = 0)
      : seed_(seed), stream_(stream), counter_(counter) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return next_u64(); }
  std::uint64_t next_u64();

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n); n must be > 0.
  std::uint64_t below(std::uint64_t n);
  /// Standard normal via Box-Muller (one block pair per value, no caching, so the
  /// state stays the counter triple).
  double normal();

  /// Independent generator on another stream with the same key.
  CounterRng fork(std::uint64_t stream) const { return CounterRng(seed_, stream, 0); }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  std::uint64_t counter() const { return counter_; }

  friend bool operator==(const CounterRng&, const CounterRng&) = default;

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  std::uint64_t counter_ = 0;
};

/// Stateless helper: mixes several integers into one 64-bit seed.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace gs4d
