#include "mxrot/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mxrot/errors.hpp"
#include "mxrot/transforms.hpp"

namespace mxrot::report {

Json number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

Json envelope(const std::string& report_type, Json params) {
  Json j;
  j["report_type"] = report_type;
  j["params"] = params.is_null() ? Json::object() : std::move(params);
  return j;
}

namespace {

std::string csv_num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Json numbers(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

}  // namespace

Json quantize_report(Json params, const Tensor& input, const Tensor& reconstructed, const QuantizedTensor& q) {
  Json j = envelope("quantize", std::move(params));
  j["rows"] = input.rows();
  j["cols"] = input.cols();
  j["format"] = q.config.name();
  j["block_size"] = q.block_len();
  j["num_scales"] = q.scales.size();
  j["mse"] = number(mse(input, reconstructed));
  j["qsnr_db"] = number(qsnr(input, reconstructed));
  float smin = q.scales.front(), smax = q.scales.front();
  for (float s : q.scales) {
    smin = std::min(smin, s);
    smax = std::max(smax, s);
  }
  j["scale_min"] = smin;
  j["scale_max"] = smax;
  return j;
}

Json blocks_report(Json params, const BlockReport& rep) {
  Json j = envelope("blocks", std::move(params));
  j["block_size"] = rep.block_size;
  j["outlier_quantile"] = rep.outlier_quantile;
  j["outlier_threshold"] = number(rep.outlier_threshold);
  j["format"] = rep.config ? rep.config->name() : "none";
  j["compare_format"] = rep.compare_config ? rep.compare_config->name() : "none";
  j["regular_count"] = rep.regular_count;
  j["outlier_count"] = rep.outlier_count;
  j["mean_regular_mse"] = number(rep.mean_regular_mse);
  j["log10_mean_regular_mse"] = number(rep.log10_mean_regular_mse);
  Json blocks = Json::array();
  for (const auto& b : rep.blocks) {
    Json o;
    o["index"] = b.index;
    o["row"] = b.row;
    o["block"] = b.block_in_row;
    o["label"] = to_string(b.label);
    o["amax"] = b.amax;
    o["mse"] = number(b.mse);
    o["relative_error_max"] = number(b.relative_error_max);
    o["compare_mse"] = number(b.compare_mse);
    o["compare_relative_error_max"] = number(b.compare_relative_error_max);
    o["error_ratio"] = number(b.mse / b.compare_mse);
    blocks.push_back(std::move(o));
  }
  j["blocks"] = std::move(blocks);
  return j;
}

std::string blocks_csv(const BlockReport& rep) {
  std::ostringstream os;
  os << "index,row,block,label,amax,mse,relative_error_max,compare_mse,compare_relative_error_max\n";
  for (const auto& b : rep.blocks)
    os << b.index << ',' << b.row << ',' << b.block_in_row << ',' << to_string(b.label) << ','
       << csv_num(b.amax) << ',' << csv_num(b.mse) << ',' << csv_num(b.relative_error_max) << ','
       << csv_num(b.compare_mse) << ',' << csv_num(b.compare_relative_error_max) << '\n';
  return os.str();
}

Json block_elements_report(Json params, const std::vector<std::pair<std::string, BlockElements>>& blocks) {
  Json j = envelope("block_elements", std::move(params));
  Json arr = Json::array();
  for (const auto& [label, e] : blocks) {
    Json o;
    o["label"] = label;
    o["values"] = e.values;
    o["relative_error"] = numbers(e.relative_error);
    o["compare_relative_error"] = numbers(e.compare_relative_error);
    o["error_ratio"] = numbers(e.error_ratio);
    arr.push_back(std::move(o));
  }
  j["blocks"] = std::move(arr);
  return j;
}

Json thresholds_report(Json params, const std::vector<std::pair<std::string, ThresholdCurve>>& curves) {
  Json j = envelope("thresholds", std::move(params));
  Json arr = Json::array();
  for (const auto& [name, c] : curves) {
    Json o;
    o["series"] = name;
    o["thresholds"] = numbers(c.thresholds);
    o["fractions"] = numbers(c.fractions);
    arr.push_back(std::move(o));
  }
  j["curves"] = std::move(arr);
  return j;
}

std::string thresholds_csv(const std::vector<std::pair<std::string, ThresholdCurve>>& curves) {
  std::ostringstream os;
  os << "series,threshold,fraction\n";
  for (const auto& [name, c] : curves)
    for (std::size_t i = 0; i < c.thresholds.size(); ++i)
      os << name << ',' << csv_num(c.thresholds[i]) << ',' << csv_num(c.fractions[i]) << '\n';
  return os.str();
}

Json sweep_report(Json params, const std::vector<SweepPoint>& sweep) {
  Json j = envelope("sweep", std::move(params));
  Json dims = Json::array(), errs = Json::array();
  for (const auto& p : sweep) {
    dims.push_back(p.dim);
    errs.push_back(number(p.mse));
  }
  j["dims"] = std::move(dims);
  j["mse"] = std::move(errs);
  j["argmin_dim"] = sweep_argmin(sweep);
  return j;
}

std::string sweep_csv(const std::vector<SweepPoint>& sweep) {
  std::ostringstream os;
  os << "dim,mse\n";
  for (const auto& p : sweep) os << p.dim << ',' << csv_num(p.mse) << '\n';
  return os.str();
}

Json scales_report(Json params, const std::vector<std::pair<std::string, std::vector<float>>>& series,
                   double growth_factor) {
  Json j = envelope("scales", std::move(params));
  j["growth_factor"] = growth_factor;
  Json arr = Json::array();
  const std::vector<float>* base = nullptr;
  for (const auto& s : series)
    if (s.first == "original") base = &s.second;
  for (const auto& [name, v] : series) {
    Json o;
    o["series"] = name;
    o["amax"] = v;
    if (base && &v != base) o["grown_blocks"] = count_grown_blocks(*base, v, growth_factor);
    arr.push_back(std::move(o));
  }
  j["series"] = std::move(arr);
  return j;
}

std::string scales_csv(const std::vector<std::pair<std::string, std::vector<float>>>& series) {
  std::ostringstream os;
  os << "block";
  for (const auto& s : series) os << ',' << s.first;
  os << '\n';
  const std::size_t n = series.empty() ? 0 : series.front().second.size();
  for (std::size_t i = 0; i < n; ++i) {
    os << i;
    for (const auto& s : series) os << ',' << csv_num(s.second.at(i));
    os << '\n';
  }
  return os.str();
}

Json pot_curve_report(Json params, const std::vector<std::pair<double, double>>& curve) {
  Json j = envelope("pot_curve", std::move(params));
  Json xs = Json::array(), es = Json::array();
  for (const auto& [x, e] : curve) {
    xs.push_back(number(x));
    es.push_back(number(e));
  }
  j["x"] = std::move(xs);
  j["relative_error"] = std::move(es);
  return j;
}

Json regular_loss_report(Json params, const std::vector<std::pair<std::string, RegularLossDelta>>& entries) {
  Json j = envelope("regular_loss", std::move(params));
  Json arr = Json::array();
  for (const auto& [name, d] : entries) {
    Json o;
    o["rotation"] = name;
    o["threshold_pre"] = number(d.threshold_pre);
    o["threshold_post"] = number(d.threshold_post);
    o["before"] = number(d.before);
    o["after"] = number(d.after);
    o["after_own_threshold"] = number(d.after_own_threshold);
    o["before_log10"] = number(d.before_log10);
    o["after_log10"] = number(d.after_log10);
    o["after_own_threshold_log10"] = number(d.after_own_threshold_log10);
    o["regular_before"] = d.regular_before;
    o["regular_after"] = d.regular_after;
    o["regular_after_own"] = d.regular_after_own;
    arr.push_back(std::move(o));
  }
  j["entries"] = std::move(arr);
  return j;
}

Json matrix_report(Json params, const std::vector<LayerResult>& results) {
  Json j = envelope("matrix", std::move(params));
  Json arr = Json::array();
  for (const auto& r : results) {
    Json o;
    o["method"] = r.method;
    o["act_format"] = r.act_format;
    o["weight_format"] = r.weight_format;
    o["mse"] = number(r.output_mse);
    o["qsnr_db"] = number(r.output_qsnr);
    o["flops"] = {{"rotation", r.rotation_flops}, {"matmul", r.matmul_flops}};
    arr.push_back(std::move(o));
  }
  j["records"] = std::move(arr);
  return j;
}

Json gptq_report(Json params, double gptq_mse, double rtn_mse, double weight_mse_gptq, double weight_mse_rtn) {
  Json j = envelope("gptq", std::move(params));
  j["output_mse_gptq"] = number(gptq_mse);
  j["output_mse_rtn"] = number(rtn_mse);
  j["weight_mse_gptq"] = number(weight_mse_gptq);
  j["weight_mse_rtn"] = number(weight_mse_rtn);
  return j;
}

Json optimize_report(Json params, const CayleyState& state) {
  Json j = envelope("optimize", std::move(params));
  j["steps"] = state.iteration;
  j["step_size"] = state.step_size;
  j["loss_history"] = numbers(state.loss_history);
  j["initial_loss"] = number(state.loss_history.front());
  j["final_loss"] = number(state.loss_history.back());
  j["orthogonality_error"] = number(state.rotation.orthogonality_error());
  return j;
}

Json flops_report(Json params, std::size_t width, std::size_t g) {
  Json j = envelope("flops", std::move(params));
  const auto global = online_rotation_flops(width, RotationScope::Global);
  const auto block = online_rotation_flops(width, RotationScope::BlockDiagonal, g);
  j["width"] = width;
  j["block_dim"] = g;
  j["global"] = global;
  j["block"] = block;
  j["ratio"] = static_cast<double>(global) / static_cast<double>(block);
  return j;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open " + tmp.string() + " for writing");
    f << text;
    f.flush();
    if (!f) throw Error("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

void write_json(const std::filesystem::path& path, const Json& j) { write_text_atomic(path, j.dump(2) + "\n"); }

}  // namespace mxrot::report
