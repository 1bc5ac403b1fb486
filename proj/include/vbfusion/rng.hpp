// Copyright (c) 2026 vbfusion authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>

namespace vbf {

/// Permuted-congruential generator (PCG-XSH-RR, 64-bit state, 32-bit output).
///
/// All randomness in the project flows through this generator so that results
/// are bit-identical across platforms and compilers. The `stream` parameter
/// selects one of 2^63 independent sequences; per-image work uses the image
/// index as the stream id, which makes batch-order and thread-count
/// irrelevant to the values drawn for a given image.
class Pcg32 {
 public:
  explicit Pcg32(uint64_t seed, uint64_t stream = 0)
      : state_(0), inc_((stream << 1u) | 1u) {
    next_u32();
    state_ += seed;
    next_u32();
  }

  uint32_t next_u32() {
    uint64_t old = state_;
    state_ = old * 6364136223846793005ULL + inc_;
    uint32_t xorshifted = static_cast<uint32_t>(((old >> 18u) ^ old) >> 27u);
    uint32_t rot = static_cast<uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
  }

  uint64_t next_u64() {
    uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  /// Unbiased integer in [0, n), Lemire's multiply-shift with rejection.
  uint32_t bounded(uint32_t n) {
    uint64_t m = static_cast<uint64_t>(next_u32()) * n;
    uint32_t low = static_cast<uint32_t>(m);
    if (low < n) {
      uint32_t threshold = (0u - n) % n;
      while (low < threshold) {
        m = static_cast<uint64_t>(next_u32()) * n;
        low = static_cast<uint32_t>(m);
      }
    }
    return static_cast<uint32_t>(m >> 32);
  }

  /// Uniform integer in the inclusive range [lo, hi].
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(bounded(static_cast<uint32_t>(hi - lo + 1)));
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller. Two uniforms are consumed per call;
  /// no caching, so the draw sequence is a pure function of call count.
  double normal(double mean = 0.0, double stddev = 1.0) {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    double z = std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * 3.141592653589793238462643 * u2);
    return mean + stddev * z;
  }

  bool coin() { return (next_u32() & 1u) != 0; }

 private:
  uint64_t state_;
  uint64_t inc_;
};

}  // namespace vbf
