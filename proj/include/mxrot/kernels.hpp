#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mxrot/tensor.hpp"

// OpenMP kernels behind the numerical modules. Each has a plain serial twin
// in mxrot/serial.hpp that the tests compare against.
namespace mxrot::kernels {

/// C = A * B with binary32 accumulation.
Tensor matmul(const Tensor& a, const Tensor& b);

/// Raw form: c (m x n) = a (m x k) * b (k x n); c is overwritten.
void matmul(std::span<const float> a, std::span<const float> b, std::span<float> c, std::size_t m,
            std::size_t k, std::size_t n);

/// General strided product: c = alpha * a * b (+ c when accumulate).
/// a is m x k with row stride lda, b is k x n with stride ldb, c is m x n with stride ldc.
void gemm(const float* a, std::size_t lda, const float* b, std::size_t ldb, float* c, std::size_t ldc,
          std::size_t m, std::size_t k, std::size_t n, float alpha = 1.0f, bool accumulate = false);

/// Upper-and-lower filled X^T X in binary64, width x width, row-major.
std::vector<double> gram(const Tensor& x);

/// out = x * diag(B_0, ..., B_{n-1}); each block is g x g row-major and
/// x.cols() == blocks.size() * g.
Tensor block_diag_right(const Tensor& x, std::span<const Tensor> blocks);

/// out = diag(B_0, ...)^T * w; w.rows() == blocks.size() * g.
Tensor block_diag_left_transposed(const Tensor& w, std::span<const Tensor> blocks);

}  // namespace mxrot::kernels
