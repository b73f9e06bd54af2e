#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mxrot/analysis.hpp"
#include "mxrot/pipeline.hpp"
#include "mxrot/rotopt.hpp"

// Report objects written by the CLI. Every JSON report has the shape
//   {"report_type": <string>, "params": {...}, <payload fields>}
// and non-finite numbers are written as the strings "inf", "-inf", "nan".
namespace mxrot::report {

using Json = nlohmann::ordered_json;

Json number(double v);
Json envelope(const std::string& report_type, Json params);

/// report_type "quantize": shape, format, mse, qsnr_db, scale summary.
Json quantize_report(Json params, const Tensor& input, const Tensor& reconstructed, const QuantizedTensor& q);

/// report_type "blocks": summary plus a "blocks" array, one object per block.
Json blocks_report(Json params, const BlockReport& rep);
/// index,row,block,label,amax,mse,relative_error_max,compare_mse,compare_relative_error_max
std::string blocks_csv(const BlockReport& rep);

/// report_type "block_elements": element values and both error normalizations.
Json block_elements_report(Json params, const std::vector<std::pair<std::string, BlockElements>>& blocks);

/// report_type "thresholds": one curve per named tensor state.
Json thresholds_report(Json params, const std::vector<std::pair<std::string, ThresholdCurve>>& curves);
/// series,threshold,fraction
std::string thresholds_csv(const std::vector<std::pair<std::string, ThresholdCurve>>& curves);

/// report_type "sweep": dims, mse and argmin_dim.
Json sweep_report(Json params, const std::vector<SweepPoint>& sweep);
/// dim,mse
std::string sweep_csv(const std::vector<SweepPoint>& sweep);

/// report_type "scales": per-block amax lists per named state and grown-block counts against "original".
Json scales_report(Json params, const std::vector<std::pair<std::string, std::vector<float>>>& series,
                   double growth_factor);
/// block,<series...>
std::string scales_csv(const std::vector<std::pair<std::string, std::vector<float>>>& series);

/// report_type "pot_curve".
Json pot_curve_report(Json params, const std::vector<std::pair<double, double>>& curve);

/// report_type "regular_loss": one entry per named rotation.
Json regular_loss_report(Json params, const std::vector<std::pair<std::string, RegularLossDelta>>& entries);

/// report_type "matrix": records {method, act_format, weight_format, mse, qsnr_db, flops{rotation, matmul}}.
Json matrix_report(Json params, const std::vector<LayerResult>& results);

/// report_type "gptq": calibration output MSE of GPTQ and RTN weights.
Json gptq_report(Json params, double gptq_mse, double rtn_mse, double weight_mse_gptq, double weight_mse_rtn);

/// report_type "optimize": loss history and final orthogonality error.
Json optimize_report(Json params, const CayleyState& state);

/// report_type "flops".
Json flops_report(Json params, std::size_t width, std::size_t g);

/// Writes via a temporary sibling and rename, so readers never see a partial file.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const Json& j);

}  // namespace mxrot::report
