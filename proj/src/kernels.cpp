#include "mxrot/kernels.hpp"

#include <algorithm>
#include <string>

#include "mxrot/errors.hpp"

namespace mxrot::kernels {

namespace {

constexpr std::size_t kRowTile = 16;
constexpr std::size_t kDepthTile = 128;
constexpr std::size_t kColTile = 512;

void check_blocks(std::span<const Tensor> blocks, std::size_t width, const char* what) {
  if (blocks.empty()) throw InvalidArgument(std::string(what) + ": no blocks");
  const std::size_t g = blocks.front().rows();
  for (const auto& b : blocks)
    if (b.rows() != g || b.cols() != g) throw InvalidArgument(std::string(what) + ": blocks must be g x g");
  if (g * blocks.size() != width)
    throw InvalidArgument(std::string(what) + ": block structure covers " + std::to_string(g * blocks.size()) +
                          " features but the tensor has " + std::to_string(width));
}

}  // namespace

void gemm(const float* a, std::size_t lda, const float* b, std::size_t ldb, float* c, std::size_t ldc,
          std::size_t m, std::size_t k, std::size_t n, float alpha, bool accumulate) {
  if (!accumulate) {
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < m; ++i) std::fill_n(c + i * ldc, n, 0.0f);
  }
  const std::size_t row_tiles = (m + kRowTile - 1) / kRowTile;
#pragma omp parallel for schedule(static)
  for (std::size_t t = 0; t < row_tiles; ++t) {
    const std::size_t i0 = t * kRowTile;
    const std::size_t i1 = std::min(m, i0 + kRowTile);
    for (std::size_t k0 = 0; k0 < k; k0 += kDepthTile) {
      const std::size_t k1 = std::min(k, k0 + kDepthTile);
      for (std::size_t j0 = 0; j0 < n; j0 += kColTile) {
        const std::size_t j1 = std::min(n, j0 + kColTile);
        for (std::size_t i = i0; i < i1; ++i) {
          float* __restrict crow = c + i * ldc;
          for (std::size_t kk = k0; kk < k1; ++kk) {
            const float av = alpha * a[i * lda + kk];
            const float* __restrict brow = b + kk * ldb;
#pragma omp simd
            for (std::size_t j = j0; j < j1; ++j) crow[j] += av * brow[j];
          }
        }
      }
    }
  }
}

void matmul(std::span<const float> a, std::span<const float> b, std::span<float> c, std::size_t m,
            std::size_t k, std::size_t n) {
  if (a.size() != m * k || b.size() != k * n || c.size() != m * n)
    throw InvalidArgument("matmul: buffer sizes do not match dimensions");
  gemm(a.data(), k, b.data(), n, c.data(), n, m, k, n);
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows())
    throw InvalidArgument("matmul: inner dimensions differ (" + std::to_string(a.cols()) + " vs " +
                          std::to_string(b.rows()) + ")");
  std::vector<float> c(a.rows() * b.cols());
  matmul(a.data(), b.data(), c, a.rows(), a.cols(), b.cols());
  return Tensor(a.rows(), b.cols(), std::move(c));
}

std::vector<double> gram(const Tensor& x) {
  const std::size_t n = x.cols();
  const std::size_t rows = x.rows();
  const float* src = x.data().data();
  std::vector<double> h(n * n, 0.0);
  constexpr std::size_t kTile = 16;
  const std::size_t tiles = (n + kTile - 1) / kTile;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t t = 0; t < tiles; ++t) {
    const std::size_t p0 = t * kTile;
    const std::size_t p1 = std::min(n, p0 + kTile);
    for (std::size_t r = 0; r < rows; ++r) {
      const float* xr = src + r * n;
      for (std::size_t p = p0; p < p1; ++p) {
        const double xp = xr[p];
        double* __restrict hp = h.data() + p * n;
#pragma omp simd
        for (std::size_t q = p; q < n; ++q) hp[q] += xp * static_cast<double>(xr[q]);
      }
    }
  }
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = p + 1; q < n; ++q) h[q * n + p] = h[p * n + q];
  return h;
}

Tensor block_diag_right(const Tensor& x, std::span<const Tensor> blocks) {
  check_blocks(blocks, x.cols(), "block_diag_right");
  const std::size_t g = blocks.front().rows();
  const std::size_t cols = x.cols();
  std::vector<float> out(x.size());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    gemm(x.data().data() + b * g, cols, blocks[b].data().data(), g, out.data() + b * g, cols, x.rows(), g, g);
  }
  return Tensor(x.rows(), cols, std::move(out));
}

Tensor block_diag_left_transposed(const Tensor& w, std::span<const Tensor> blocks) {
  check_blocks(blocks, w.rows(), "block_diag_left_transposed");
  const std::size_t g = blocks.front().rows();
  const std::size_t cols = w.cols();
  std::vector<float> out(w.size());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const Tensor bt = blocks[b].transposed();
    gemm(bt.data().data(), g, w.data().data() + b * g * cols, cols, out.data() + b * g * cols, cols, g, g, cols);
  }
  return Tensor(w.rows(), cols, std::move(out));
}

}  // namespace mxrot::kernels
