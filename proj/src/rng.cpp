#include "mxrot/rng.hpp"

#include <cmath>
#include <numbers>

namespace mxrot {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept
    : seed_(seed), stream_key_(splitmix64(stream * kGolden + 1)) {}

std::uint64_t CounterRng::at(std::uint64_t counter) const noexcept {
  return splitmix64(splitmix64(seed_ + kGolden * (counter + 1)) ^ stream_key_);
}

double CounterRng::uniform_at(std::uint64_t counter) const noexcept {
  return (static_cast<double>(at(counter) >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::gaussian_at(std::uint64_t index) const noexcept {
  const double u1 = uniform_at(2 * index);
  const double u2 = uniform_at(2 * index + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t CounterRng::next_below(std::uint64_t bound) noexcept {
  // Lemire-free simple rejection: discard the biased tail of the 64-bit range.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  for (;;) {
    const std::uint64_t v = next();
    if (v < limit) return v % bound;
  }
}

}  // namespace mxrot
