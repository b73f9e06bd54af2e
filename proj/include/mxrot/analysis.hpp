#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mxrot/formats.hpp"
#include "mxrot/tensor.hpp"
#include "mxrot/transforms.hpp"

namespace mxrot {

enum class BlockLabel : std::uint8_t { Regular, Outlier };

struct BlockStats {
  std::size_t index = 0;  // row-major block index
  std::size_t row = 0;
  std::size_t block_in_row = 0;
  float amax = 0.0f;
  BlockLabel label = BlockLabel::Regular;
  double mse = 0.0;
  double relative_error_max = 0.0;
  // Same statistics under a comparison format; NaN when none was requested.
  double compare_mse = std::numeric_limits<double>::quiet_NaN();
  double compare_relative_error_max = std::numeric_limits<double>::quiet_NaN();
};

/// Per-block labels and error statistics. Blocks tile each row along columns.
struct BlockReport {
  std::size_t block_size = 32;
  double outlier_quantile = 0.001;
  double outlier_threshold = 0.0;
  std::optional<QuantConfig> config;
  std::optional<QuantConfig> compare_config;
  std::vector<BlockStats> blocks;
  std::size_t regular_count = 0;
  std::size_t outlier_count = 0;
  double mean_regular_mse = 0.0;
  double log10_mean_regular_mse = 0.0;
};

/// Threshold t such that the elements with |x| > t are the top ceil(q n)
/// magnitudes (nearest rank on |x| sorted descending). q = 0 gives max|x|.
double magnitude_threshold(const Tensor& t, double q);

/// Labels every block: Outlier iff it holds an element with |x| > threshold,
/// where threshold = magnitude_threshold(t, outlier_quantile).
BlockReport classify_blocks(const Tensor& t, std::size_t block_size, double outlier_quantile = 0.001);
/// Same labelling against an externally supplied threshold.
BlockReport classify_blocks_at(const Tensor& t, std::size_t block_size, double threshold);

/// Fills per-block MSE and max relative error of fake_quantize(t, cfg), plus
/// the same numbers for `compare` when given. Regular-block means are updated.
BlockReport block_error_report(const Tensor& t, const QuantConfig& cfg, BlockReport skeleton,
                               const std::optional<QuantConfig>& compare = std::nullopt);

/// Element-level view of one block, for regular/outlier block plots.
struct BlockElements {
  std::vector<float> values;
  std::vector<double> relative_error;          // |x - q(x)| / |x| under the primary format
  std::vector<double> compare_relative_error;  // same under the comparison format
  std::vector<double> error_ratio;             // |x - q(x)| / |x - q'(x)|; NaN when both are zero
};
BlockElements block_elements(const Tensor& t, std::size_t row, std::size_t block, std::size_t block_size,
                             const QuantConfig& cfg, const QuantConfig& compare);

struct ThresholdCurve {
  std::vector<double> thresholds;
  std::vector<double> fractions;  // share of elements with |x| > threshold
};
/// Throws InvalidArgument if thresholds are not ascending.
ThresholdCurve threshold_fractions(const Tensor& t, const std::vector<double>& thresholds);

struct RegularLossDelta {
  double threshold_pre = 0.0;   // outlier threshold of the input
  double threshold_post = 0.0;  // outlier threshold of the rotated tensor
  double before = 0.0;          // mean regular-block MSE of the input
  double after = 0.0;           // rotated tensor, labelled with threshold_pre
  double after_own_threshold = 0.0;  // rotated tensor, labelled with threshold_post
  double before_log10 = 0.0;
  double after_log10 = 0.0;
  double after_own_threshold_log10 = 0.0;
  std::size_t regular_before = 0;
  std::size_t regular_after = 0;
  std::size_t regular_after_own = 0;
};

/// Mean regular-block quantization MSE before and after rotating t.
/// Throws InvalidArgument when either side has no regular blocks.
RegularLossDelta regular_block_loss_delta(const Tensor& t, const QuantConfig& cfg, const RotationMatrix& rotation,
                                          double outlier_quantile = 0.001);
RegularLossDelta regular_block_loss_delta(const Tensor& t, const QuantConfig& cfg, const RotationSpec& rotation,
                                          double outlier_quantile = 0.001);

/// Max |x| of every block, row-major block order.
std::vector<float> block_scale_distribution(const Tensor& t, std::size_t block_size);

/// Number of blocks whose amax grew by more than `factor` (e.g. 1.25 = +25%).
std::size_t count_grown_blocks(const std::vector<float>& before, const std::vector<float>& after,
                               double factor = 1.25);

struct SweepPoint {
  std::size_t dim = 0;
  double mse = 0.0;
};
/// Quantization MSE of t after a randomized block rotation of each width in
/// `dims` (same seed for every width).
std::vector<SweepPoint> rotation_dim_sweep(const Tensor& t, const QuantConfig& cfg,
                                           const std::vector<std::size_t>& dims, std::uint64_t seed);
std::size_t sweep_argmin(const std::vector<SweepPoint>& sweep);

std::string to_string(BlockLabel l);

}  // namespace mxrot
