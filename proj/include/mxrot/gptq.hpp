#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mxrot/formats.hpp"
#include "mxrot/tensor.hpp"

namespace mxrot {

/// Running H = sum 2 X^T X over calibration batches, in binary64.
class HessianAccumulator {
 public:
  explicit HessianAccumulator(std::size_t width);

  /// Wraps an explicit symmetric matrix (row-major, width x width).
  static HessianAccumulator from_matrix(std::vector<double> h, std::size_t width, std::size_t n_samples);

  /// H += 2 X^T X for a batch of calibration rows.
  void accumulate(const Tensor& x_batch);

  std::size_t width() const noexcept { return width_; }
  std::size_t n_samples() const noexcept { return n_samples_; }
  std::span<const double> matrix() const noexcept { return h_; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return h_[i * width_ + j]; }

 private:
  std::size_t width_;
  std::size_t n_samples_ = 0;
  std::vector<double> h_;
};

HessianAccumulator accumulate_hessian(HessianAccumulator acc, const Tensor& x_batch);

struct GptqParams {
  /// lambda = damping_fraction * mean(diag H) is added to the diagonal.
  double damping_fraction = 0.01;
  /// Input dimensions per batched (lazy) update.
  std::size_t lazy_block = 128;
  /// Process input dimensions by descending Hessian diagonal. Block scales are
  /// then fixed up front from the unmodified weights.
  bool act_order = false;

  void validate() const;
};

/// GPTQ over a weight matrix of shape in_features x out_features.
///
/// Input dimensions are quantized in order; each rounding residual is spread
/// over the not-yet-quantized dimensions through the upper Cholesky factor of
/// the damped inverse Hessian. A block's scales are taken from the current
/// (already compensated) weights when the sweep reaches its first dimension.
/// Returns a tensor blocked AlongRows, i.e. along the input dimension.
QuantizedTensor gptq_quantize(const Tensor& w, const HessianAccumulator& acc, const QuantConfig& cfg,
                              const GptqParams& params = {});

/// Round-to-nearest weight quantization with the same blocking as gptq_quantize.
QuantizedTensor rtn_quantize_weights(const Tensor& w, const QuantConfig& cfg);

}  // namespace mxrot
