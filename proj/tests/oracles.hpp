#pragma once

// Reference computations written independently of the library code paths:
// brute-force searches, textbook recursions and binary64 loops.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "mxrot/formats.hpp"
#include "mxrot/tensor.hpp"

namespace oracle {

// Magnitudes by decoding E2M1 bit patterns: bias 1, exponent 0 is subnormal.
inline std::vector<double> e2m1_from_bits() {
  std::vector<double> out;
  for (unsigned code = 0; code < 16; ++code) {
    const unsigned sign = code >> 3, exp = (code >> 1) & 3u, man = code & 1u;
    const double mag = exp == 0 ? 0.5 * man : std::ldexp(1.0 + 0.5 * man, static_cast<int>(exp) - 1);
    out.push_back(sign ? -mag : mag);
  }
  return out;
}

inline std::vector<double> grid(mxrot::ElementKind kind) {
  if (kind == mxrot::ElementKind::FP4_E2M1) return {0, 0.5, 1, 1.5, 2, 3, 4, 6};
  return {0, 1, 2, 3, 4, 5, 6, 7};
}

// Exhaustive nearest search over the signed grid; exact ties take the even
// grid index (even mantissa / even integer).
inline double nearest_value(mxrot::ElementKind kind, double x, double scale) {
  const auto g = grid(kind);
  double best = 0.0, best_err = INFINITY;
  int best_idx = 0;
  for (int sign : {1, -1}) {
    for (int i = 0; i < static_cast<int>(g.size()); ++i) {
      const double v = sign * g[i] * scale;
      const double err = std::fabs(x - v);
      if (err < best_err || (err == best_err && (best_idx % 2 == 1) && i % 2 == 0)) {
        best = v;
        best_err = err;
        best_idx = i;
      }
    }
  }
  return best == 0.0 ? 0.0 : best;
}

// 2^e with 2^e <= a < 2^(e+1), by stepping.
inline int floor_log2(double a) {
  int e = 0;
  while (std::ldexp(1.0, e) > a) --e;
  while (std::ldexp(1.0, e + 1) <= a) ++e;
  return e;
}

// Nearest binary16 value (ties to even), saturating at 65504 and never zero.
inline double to_half(double v) {
  if (v >= 65520.0) return 65504.0;
  const int e = std::max(floor_log2(v), -14);
  const double quantum = std::ldexp(1.0, e - 10);
  const double q = std::nearbyint(v / quantum) * quantum;  // default mode: ties to even
  if (q == 0.0) return std::ldexp(1.0, -24);
  return std::min(q, 65504.0);
}

inline double scale(const std::vector<float>& block, const mxrot::QuantConfig& cfg) {
  double amax = 0.0;
  for (float v : block) amax = std::max(amax, std::fabs(static_cast<double>(v)));
  const double max_code = cfg.element == mxrot::ElementKind::FP4_E2M1 ? 6.0 : 7.0;
  if (cfg.scale == mxrot::ScaleKind::POT_E8M0) {
    if (amax == 0.0) return std::ldexp(1.0, -127);
    return std::ldexp(1.0, std::clamp(floor_log2(amax) - 2, -127, 127));
  }
  if (amax == 0.0) return std::ldexp(1.0, -24);
  return to_half(amax / max_code);
}

// H_{2n} = [[H, H], [H, -H]] starting from H_1 = [1].
inline std::vector<std::vector<int>> sylvester(std::size_t n) {
  std::vector<std::vector<int>> h = {{1}};
  while (h.size() < n) {
    const std::size_t m = h.size();
    std::vector<std::vector<int>> next(2 * m, std::vector<int>(2 * m));
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        next[i][j] = next[i][j + m] = next[i + m][j] = h[i][j];
        next[i + m][j + m] = -h[i][j];
      }
    h = std::move(next);
  }
  return h;
}

inline std::vector<double> matmul(const mxrot::Tensor& a, const mxrot::Tensor& b) {
  std::vector<double> c(a.rows() * b.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k)
      for (std::size_t j = 0; j < b.cols(); ++j) c[i * b.cols() + j] += double(a(i, k)) * double(b(k, j));
  return c;
}

inline mxrot::Tensor random_tensor(std::size_t rows, std::size_t cols, std::mt19937_64& gen, double sd = 1.0) {
  std::normal_distribution<double> d(0.0, sd);
  std::vector<float> v(rows * cols);
  for (auto& x : v) x = static_cast<float>(d(gen));
  return mxrot::Tensor(rows, cols, std::move(v));
}

inline double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

inline double max_abs_diff(const mxrot::Tensor& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) m = std::max(m, std::fabs(double(a.data()[i]) - b[i]));
  return m;
}

}  // namespace oracle
