#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mxrot/formats.hpp"
#include "mxrot/gptq.hpp"
#include "mxrot/tensor.hpp"
#include "mxrot/transforms.hpp"

namespace mxrot {

enum class Compensator : std::uint8_t { RTN, GPTQ };

/// Cayley refinement of a block rotation before it is fused (BRQ_Spin).
struct RotationRefinement {
  std::size_t steps = 100;
  double step_size = 1.0;
  /// Leading rows of X used as the optimization set; 0 = all rows.
  std::size_t calib_rows = 256;
};

/// One quantized linear-layer recipe.
///
/// A Global rotation with dim 0 takes the layer width. Unset act_cfg /
/// weight_cfg leave that operand unquantized.
struct MethodSpec {
  std::string name;
  std::optional<RotationSpec> rotation;
  std::optional<RotationRefinement> refine;
  std::optional<double> smoothing_alpha;
  Compensator compensator = Compensator::RTN;
  std::optional<QuantConfig> act_cfg;
  std::optional<QuantConfig> weight_cfg;
  GptqParams gptq;

  /// rtn | smoothquant | gptq | quarot | quarot+ | brq | brq_spin, with no
  /// quantizers set. Throws InvalidArgument listing the valid names otherwise.
  static MethodSpec preset(const std::string& name, std::uint64_t seed);
  static const std::vector<std::string>& preset_names();
  MethodSpec with_formats(const std::optional<QuantConfig>& act, const std::optional<QuantConfig>& weight) const;
};

struct LayerResult {
  std::string method;
  std::string act_format;     // preset name or "none"
  std::string weight_format;  // preset name or "none"
  double output_mse = 0.0;
  double output_qsnr = 0.0;  // dB, +inf when exact
  std::uint64_t rotation_flops = 0;  // online activation rotation over all rows
  std::uint64_t matmul_flops = 0;
};

/// Fake-quantized Y = X W for X (tokens x in) and W (in x out):
/// smoothing fold, rotation fusion X R / R^T W, activation quantization,
/// RTN or GPTQ weights (Hessian from the transformed X), then the product.
/// Output error is measured against X W computed before any transform.
LayerResult run_layer(const Tensor& x, const Tensor& w, const MethodSpec& method);
/// Same, against a precomputed reference product.
LayerResult run_layer(const Tensor& x, const Tensor& w, const MethodSpec& method, const Tensor& reference);

/// Every method under every format (format used for both operands), method-major.
std::vector<LayerResult> run_matrix(const Tensor& x, const Tensor& w, const std::vector<MethodSpec>& methods,
                                    const std::vector<QuantConfig>& formats);

std::string to_string(Compensator c);

}  // namespace mxrot
