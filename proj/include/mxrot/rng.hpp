#pragma once

#include <cstdint>

namespace mxrot {

/// Counter-based 64-bit generator.
///
/// Draw n of stream s under seed k is
///   splitmix64(k + golden * (n + 1)) XOR splitmix64(s * golden + 1)
/// followed by another splitmix64 finalization. Every draw is a pure function
/// of (seed, stream, counter), so streams can be split per block or per element
/// and evaluated in any order, including in parallel.
///
/// Gaussian draws use the Box-Muller transform on two consecutive uniforms
/// (cosine branch only), so draw i consumes counters 2i and 2i+1.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept;

  std::uint64_t at(std::uint64_t counter) const noexcept;
  /// Uniform in the open interval (0, 1) with 53 random bits.
  double uniform_at(std::uint64_t counter) const noexcept;
  /// Standard normal sample number `index` of this stream.
  double gaussian_at(std::uint64_t index) const noexcept;

  std::uint64_t next() noexcept { return at(counter_++); }
  double next_uniform() noexcept { return uniform_at(counter_++); }
  /// Uniform integer in [0, bound) by rejection; bound > 0.
  std::uint64_t next_below(std::uint64_t bound) noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace mxrot
