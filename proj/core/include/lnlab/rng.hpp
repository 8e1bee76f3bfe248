// Copyright 2026 The lnlab Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LNLAB_RNG_HPP_
#define LNLAB_RNG_HPP_

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace lnlab {

/// Named streams derived from one experiment seed.
enum class StreamId : std::uint64_t {
  kInit = 1,
  kShuffle = 2,
  kCorruption = 3,
  kPerturbation = 4,
  kSplit = 5,
  kData = 6,
  kSubsample = 7,
  kTestData = 8,
  kAsymmetric = 9,
};

/// Deterministic random stream keyed by (seed, stream id).
///
/// Only mt19937_64 raw output is used; the uniform, normal and integer
/// transforms are implemented here so draws agree across standard libraries.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);
  RngStream(std::uint64_t seed, StreamId stream)
      : RngStream(seed, static_cast<std::uint64_t>(stream)) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n), unbiased.
  std::uint64_t below(std::uint64_t n);
  /// Standard normal via Box-Muller; caches the second variate.
  double normal();

  template <typename T>
  void shuffle(std::span<T> values) {
    for (size_t i = values.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace lnlab

#endif  // LNLAB_RNG_HPP_
