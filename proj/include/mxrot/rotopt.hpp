#pragma once

#include <cstddef>
#include <vector>

#include "mxrot/formats.hpp"
#include "mxrot/tensor.hpp"
#include "mxrot/transforms.hpp"

namespace mxrot {

/// Optimizer state for Cayley gradient steps on a (block) rotation.
/// loss_history[k] is quant_loss at iterate k.
struct CayleyState {
  RotationMatrix rotation;
  double step_size = 0.1;
  std::size_t iteration = 0;
  std::vector<double> loss_history;
};

/// ||fake_quantize(X R) - X R||_F^2 / numel.
double quant_loss(const Tensor& x, const RotationMatrix& r, const QuantConfig& cfg);

/// Euclidean gradient of quant_loss with respect to each block R_i under the
/// straight-through estimator: rounding has unit derivative and saturated
/// elements have zero derivative, so only clipped elements contribute.
/// Each entry is a g x g row-major matrix in binary64.
struct SteGradient {
  double loss = 0.0;
  std::vector<std::vector<double>> blocks;
};
SteGradient ste_gradient(const Tensor& x, const RotationMatrix& r, const QuantConfig& cfg);

/// The smooth function whose exact gradient ste_gradient returns: block
/// scales are frozen at their values under `frozen`, rounding is the
/// identity, and only the clip to +-max_code * scale remains. `r` is given as
/// dense g x g blocks in binary64 so it can be perturbed off the manifold.
double ste_surrogate_loss(const Tensor& x, const std::vector<std::vector<double>>& r_blocks,
                          const RotationMatrix& frozen, const QuantConfig& cfg);

CayleyState make_cayley_state(const Tensor& x, RotationMatrix r, const QuantConfig& cfg, double step_size);

/// One step per block: A = G R^T - R G^T, R <- (I + eta/2 A)^-1 (I - eta/2 A) R.
/// Appends the loss of the iterate the gradient was taken at. Throws
/// NumericalError when I + eta/2 A is numerically singular.
CayleyState cayley_step(CayleyState state, const Tensor& x, const QuantConfig& cfg);

/// Runs `steps` Cayley steps from `init`; the returned history has steps + 1
/// entries, the last being the loss of the final rotation.
CayleyState optimize_rotation(const Tensor& x, RotationMatrix init, const QuantConfig& cfg, std::size_t steps,
                              double step_size);

}  // namespace mxrot
