#pragma once

#include <span>
#include <vector>

#include "mxrot/formats.hpp"
#include "mxrot/tensor.hpp"

// Single-threaded reference implementations of the OpenMP kernels. Straight
// loops, no tiling; kept for cross-checking and for the benchmark baseline.
namespace mxrot::serial {

Tensor matmul(const Tensor& a, const Tensor& b);
std::vector<double> gram(const Tensor& x);
Tensor block_diag_right(const Tensor& x, std::span<const Tensor> blocks);
Tensor block_diag_left_transposed(const Tensor& w, std::span<const Tensor> blocks);
QuantizedTensor quantize(const Tensor& t, const QuantConfig& cfg,
                         BlockDirection direction = BlockDirection::AlongColumns);

}  // namespace mxrot::serial
