#include "mxrot/cli.hpp"

#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <sstream>

#include "mxrot/analysis.hpp"
#include "mxrot/errors.hpp"
#include "mxrot/gptq.hpp"
#include "mxrot/kernels.hpp"
#include "mxrot/parallel.hpp"
#include "mxrot/pipeline.hpp"
#include "mxrot/report.hpp"
#include "mxrot/rotopt.hpp"
#include "mxrot/tensorio.hpp"
#include "mxrot/transforms.hpp"

namespace mxrot::cli {

namespace {

using report::Json;

// Flag values that are wrong regardless of the input data.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct RotationFlags {
  std::string rotation = "none";
  std::size_t rot_dim = 32;
  std::optional<std::uint64_t> seed;
  bool no_random_signs = false;
};

void add_rotation_flags(CLI::App* app, RotationFlags& f, const std::string& flag = "--rotation") {
  app->add_option(flag, f.rotation, "Rotation applied first: none | global | block")
      ->check(CLI::IsMember({"none", "global", "block"}));
  app->add_option("--rot-dim", f.rot_dim, "Block width g of a block rotation (power of two)");
  app->add_option("--seed", f.seed, "Seed of the random sign diagonals (required for random rotations)");
  app->add_flag("--no-random-signs", f.no_random_signs, "Use plain Hadamard blocks without random signs");
}

bool needs_seed(const RotationFlags& f) { return f.rotation != "none" && !f.no_random_signs; }

void validate_rotation(const RotationFlags& f) {
  if (f.rotation == "block" && !is_power_of_two(f.rot_dim))
    throw UsageError("--rot-dim must be a power of two, got " + std::to_string(f.rot_dim));
  if (needs_seed(f) && !f.seed) throw UsageError("--seed is required for a randomized --rotation " + f.rotation);
}

std::optional<RotationSpec> rotation_spec(const RotationFlags& f, std::size_t width) {
  if (f.rotation == "none") return std::nullopt;
  RotationSpec s;
  s.scope = f.rotation == "global" ? RotationScope::Global : RotationScope::BlockDiagonal;
  s.dim = f.rotation == "global" ? width : f.rot_dim;
  s.seed = f.seed.value_or(0);
  s.randomized = !f.no_random_signs;
  return s;
}

Json rotation_params(const RotationFlags& f) {
  Json j;
  j["rotation"] = f.rotation;
  j["rot_dim"] = f.rot_dim;
  j["seed"] = f.seed ? Json(*f.seed) : Json(nullptr);
  j["random_signs"] = !f.no_random_signs;
  return j;
}

QuantConfig parse_format(const std::string& name, const std::string& flag) {
  try {
    return QuantConfig::from_name(name);
  } catch (const InvalidArgument& e) {
    throw UsageError(flag + ": " + e.what());
  }
}

std::optional<QuantConfig> parse_optional_format(const std::string& name, const std::string& flag) {
  if (name == "none") return std::nullopt;
  return parse_format(name, flag);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

Tensor load(const std::string& path) { return read_tensor(path); }

class Emitter {
 public:
  explicit Emitter(std::ostream& out) : out_(out) {}
  void json(const std::string& path, const Json& j) {
    if (path.empty()) {
      out_ << j.dump(2) << "\n";
    } else {
      report::write_json(path, j);
      out_ << "wrote " << path << "\n";
    }
  }
  void csv(const std::string& path, const std::string& text) {
    if (path.empty()) return;
    report::write_text_atomic(path, text);
    out_ << "wrote " << path << "\n";
  }
  std::ostream& out() { return out_; }

 private:
  std::ostream& out_;
};

// ---------------------------------------------------------------- gen

struct GenFlags {
  std::size_t rows = 0;
  std::size_t cols = 0;
  double std = 1.0;
  double outlier_frac = 0.0;
  double gain = 1.0;
  std::optional<std::uint64_t> seed;
  std::string output;
};

void register_gen(CLI::App& app, GenFlags& f) {
  auto* c = app.add_subcommand("gen", "Generate a synthetic channel-outlier tensor");
  c->add_option("--rows", f.rows, "Rows (tokens)")->required();
  c->add_option("--cols", f.cols, "Columns (features)")->required();
  c->add_option("--std", f.std, "Standard deviation of the Gaussian base");
  c->add_option("--outlier-frac", f.outlier_frac, "Fraction of columns scaled by --gain");
  c->add_option("--gain", f.gain, "Gain of the outlier columns");
  c->add_option("--seed", f.seed, "Generator seed")->required();
  c->add_option("-o,--output", f.output, "Output tensor file")->required();
}

int run_gen(const GenFlags& f, Emitter& em) {
  SyntheticSpec s{f.rows, f.cols, f.std, f.outlier_frac, f.gain, *f.seed};
  try {
    s.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  write_tensor(f.output, generate_synthetic(s));
  em.out() << "wrote " << f.output << " (" << f.rows << "x" << f.cols << ")\n";
  return kExitOk;
}

// ---------------------------------------------------------------- quantize

struct QuantizeFlags {
  std::string input;
  std::string format = "mxfp4";
  std::string output;
  std::string report;
  RotationFlags rot;
};

void register_quantize(CLI::App& app, QuantizeFlags& f) {
  auto* c = app.add_subcommand("quantize", "Fake-quantize a tensor and report the error");
  c->add_option("-i,--input", f.input, "Input tensor file")->required();
  c->add_option("--format", f.format, "Format preset: mxfp4 | mxint4 | bfp4 | bint4 | int4");
  c->add_option("-o,--output", f.output, "Write the dequantized (rotated) tensor here");
  c->add_option("--report", f.report, "JSON report path (stdout when omitted)");
  add_rotation_flags(c, f.rot);
}

int run_quantize(const QuantizeFlags& f, Emitter& em) {
  const QuantConfig cfg = parse_format(f.format, "--format");
  validate_rotation(f.rot);
  Tensor x = load(f.input);
  if (auto spec = rotation_spec(f.rot, x.cols())) x = rotate_activations(x, build_rotation(*spec, x.cols()));
  const QuantizedTensor q = quantize(x, cfg);
  const Tensor dq = dequantize(q);
  Json params = rotation_params(f.rot);
  params["input"] = f.input;
  params["format"] = f.format;
  if (!f.output.empty()) write_tensor(f.output, dq);
  em.json(f.report, report::quantize_report(std::move(params), x, dq, q));
  return kExitOk;
}

// ---------------------------------------------------------------- analyze

struct AnalyzeFlags {
  std::string mode = "blocks";
  std::string input;
  std::string format = "mxfp4";
  std::string compare_format = "bfp4";
  double quantile = 0.001;
  std::string thresholds = "0.5,1,1.5,2,3,4,6,8";
  std::string dims = "8,16,32,64,128";
  std::size_t block_size = 32;
  double growth = 1.25;
  double x_min = 1.0;
  double x_max = 16.0;
  std::size_t points = 1001;
  std::string report;
  std::string csv;
  std::string elements;
  RotationFlags rot;
};

void register_analyze_flags(CLI::App* c, AnalyzeFlags& f, bool with_mode) {
  if (with_mode)
    c->add_option("--mode", f.mode, "blocks | thresholds | sweep | scales | pot | regloss")
        ->check(CLI::IsMember({"blocks", "thresholds", "sweep", "scales", "pot", "regloss"}));
  c->add_option("-i,--input", f.input, "Input tensor file (not used by --mode pot)");
  c->add_option("--format", f.format, "Format preset");
  c->add_option("--compare-format", f.compare_format, "Second format for block error ratios, or none");
  c->add_option("--quantile", f.quantile, "Outlier quantile q: the top q share of |x| are outliers");
  c->add_option("--thresholds", f.thresholds, "Comma-separated ascending thresholds");
  c->add_option("--dims", f.dims, "Comma-separated rotation widths for the sweep");
  c->add_option("--block-size", f.block_size, "Block size for the scale distribution");
  c->add_option("--growth", f.growth, "Growth factor counted as an inflated block scale");
  c->add_option("--x-min", f.x_min, "Smallest x of the PoT rounding curve");
  c->add_option("--x-max", f.x_max, "Largest x of the PoT rounding curve");
  c->add_option("--points", f.points, "Samples of the PoT rounding curve");
  c->add_option("--report", f.report, "JSON report path (stdout when omitted)");
  c->add_option("--csv", f.csv, "CSV output path");
  c->add_option("--elements", f.elements, "blocks mode: JSON with element errors of one regular and one outlier block");
  add_rotation_flags(c, f.rot);
}

std::vector<double> parse_doubles(const std::string& s, const std::string& flag) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(flag + ": '" + item + "' is not a number");
    }
  }
  if (out.empty()) throw UsageError(flag + " must not be empty");
  return out;
}

std::vector<std::size_t> parse_dims(const std::string& s) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(s)) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != item.size() || !is_power_of_two(v)) throw UsageError("--dims: '" + item + "' is not a power of two");
    out.push_back(v);
  }
  if (out.empty()) throw UsageError("--dims must not be empty");
  return out;
}

void require_input(const AnalyzeFlags& f) {
  if (f.input.empty()) throw UsageError("--input is required for --mode " + f.mode);
}

void require_seed(const RotationFlags& f, const std::string& why) {
  if (!f.seed) throw UsageError("--seed is required for " + why);
}

int run_analyze(const AnalyzeFlags& f, Emitter& em) {
  Json params;
  params["mode"] = f.mode;
  params["input"] = f.input;

  if (f.mode == "pot") {
    if (!(f.x_min > 0 && f.x_max > f.x_min)) throw UsageError("--x-min and --x-max must satisfy 0 < x-min < x-max");
    if (f.points < 2) throw UsageError("--points must be at least 2");
    params["x_min"] = f.x_min;
    params["x_max"] = f.x_max;
    params["points"] = f.points;
    em.json(f.report, report::pot_curve_report(std::move(params), pot_rounding_error_curve(f.x_min, f.x_max, f.points)));
    return kExitOk;
  }
  require_input(f);
  const QuantConfig cfg = parse_format(f.format, "--format");
  params["format"] = f.format;

  if (f.mode == "blocks") {
    const auto compare = parse_optional_format(f.compare_format, "--compare-format");
    validate_rotation(f.rot);
    if (!(f.quantile >= 0 && f.quantile <= 1)) throw UsageError("--quantile must lie in [0, 1]");
    Tensor x = load(f.input);
    if (auto spec = rotation_spec(f.rot, x.cols())) x = rotate_activations(x, build_rotation(*spec, x.cols()));
    const std::size_t bs = cfg.effective_block(x.cols());
    const BlockReport rep = block_error_report(x, cfg, classify_blocks(x, bs, f.quantile), compare);
    params.update(rotation_params(f.rot));
    params["compare_format"] = f.compare_format;
    params["quantile"] = f.quantile;
    if (!f.elements.empty()) {
      if (!compare) throw UsageError("--elements needs a --compare-format");
      std::vector<std::pair<std::string, BlockElements>> picked;
      for (BlockLabel want : {BlockLabel::Regular, BlockLabel::Outlier}) {
        for (const auto& b : rep.blocks) {
          if (b.label != want) continue;
          picked.emplace_back(to_string(want), block_elements(x, b.row, b.block_in_row, bs, cfg, *compare));
          break;
        }
      }
      em.json(f.elements, report::block_elements_report(params, picked));
    }
    em.csv(f.csv, report::blocks_csv(rep));
    em.json(f.report, report::blocks_report(std::move(params), rep));
    return kExitOk;
  }

  if (f.mode == "thresholds") {
    const auto th = parse_doubles(f.thresholds, "--thresholds");
    validate_rotation(f.rot);
    const Tensor x = load(f.input);
    std::vector<std::pair<std::string, ThresholdCurve>> curves;
    curves.emplace_back("original", threshold_fractions(x, th));
    if (auto spec = rotation_spec(f.rot, x.cols()))
      curves.emplace_back(f.rot.rotation, threshold_fractions(rotate_activations(x, build_rotation(*spec, x.cols())), th));
    params.update(rotation_params(f.rot));
    em.csv(f.csv, report::thresholds_csv(curves));
    em.json(f.report, report::thresholds_report(std::move(params), curves));
    return kExitOk;
  }

  if (f.mode == "sweep") {
    const auto dims = parse_dims(f.dims);
    require_seed(f.rot, "the dimension sweep");
    const Tensor x = load(f.input);
    const auto sweep = rotation_dim_sweep(x, cfg, dims, *f.rot.seed);
    params["seed"] = *f.rot.seed;
    params["dims"] = dims;
    em.csv(f.csv, report::sweep_csv(sweep));
    em.json(f.report, report::sweep_report(std::move(params), sweep));
    return kExitOk;
  }

  if (f.mode == "scales") {
    if (f.block_size == 0) throw UsageError("--block-size must be positive");
    require_seed(f.rot, "the rotated scale distributions");
    if (!is_power_of_two(f.rot.rot_dim)) throw UsageError("--rot-dim must be a power of two");
    const Tensor x = load(f.input);
    const RotationSpec global{RotationScope::Global, x.cols(), *f.rot.seed, !f.rot.no_random_signs};
    const RotationSpec block{RotationScope::BlockDiagonal, f.rot.rot_dim, *f.rot.seed, !f.rot.no_random_signs};
    std::vector<std::pair<std::string, std::vector<float>>> series;
    series.emplace_back("original", block_scale_distribution(x, f.block_size));
    series.emplace_back("global", block_scale_distribution(rotate_activations(x, build_rotation(global, x.cols())),
                                                           f.block_size));
    series.emplace_back("block", block_scale_distribution(rotate_activations(x, build_rotation(block, x.cols())),
                                                          f.block_size));
    params.update(rotation_params(f.rot));
    params["block_size"] = f.block_size;
    em.csv(f.csv, report::scales_csv(series));
    em.json(f.report, report::scales_report(std::move(params), series, f.growth));
    return kExitOk;
  }

  // regloss
  require_seed(f.rot, "the rotated regular-block losses");
  if (!is_power_of_two(f.rot.rot_dim)) throw UsageError("--rot-dim must be a power of two");
  if (!(f.quantile >= 0 && f.quantile <= 1)) throw UsageError("--quantile must lie in [0, 1]");
  const Tensor x = load(f.input);
  const RotationSpec global{RotationScope::Global, x.cols(), *f.rot.seed, !f.rot.no_random_signs};
  const RotationSpec block{RotationScope::BlockDiagonal, f.rot.rot_dim, *f.rot.seed, !f.rot.no_random_signs};
  std::vector<std::pair<std::string, RegularLossDelta>> entries;
  entries.emplace_back("global", regular_block_loss_delta(x, cfg, global, f.quantile));
  entries.emplace_back("block", regular_block_loss_delta(x, cfg, block, f.quantile));
  params.update(rotation_params(f.rot));
  params["quantile"] = f.quantile;
  em.json(f.report, report::regular_loss_report(std::move(params), entries));
  return kExitOk;
}

// ---------------------------------------------------------------- gptq

struct GptqFlags {
  std::string weights;
  std::string calib;
  std::string format = "mxfp4";
  double damping = 0.01;
  std::size_t lazy_block = 128;
  bool act_order = false;
  std::string output;
  std::string report;
};

void register_gptq(CLI::App& app, GptqFlags& f) {
  auto* c = app.add_subcommand("gptq", "GPTQ-quantize a weight matrix (in x out) against calibration activations");
  c->add_option("--weights", f.weights, "Weight tensor file, in_features x out_features")->required();
  c->add_option("--calib", f.calib, "Calibration activations, tokens x in_features")->required();
  c->add_option("--format", f.format, "Format preset");
  c->add_option("--damping", f.damping, "Damping as a fraction of mean(diag H)");
  c->add_option("--lazy-block", f.lazy_block, "Input dimensions per lazy batch update");
  c->add_flag("--act-order", f.act_order, "Quantize dimensions by descending Hessian diagonal");
  c->add_option("-o,--output", f.output, "Write the dequantized weights here");
  c->add_option("--report", f.report, "JSON report path (stdout when omitted)");
}

int run_gptq(const GptqFlags& f, Emitter& em) {
  const QuantConfig cfg = parse_format(f.format, "--format");
  GptqParams p{f.damping, f.lazy_block, f.act_order};
  try {
    p.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  const Tensor w = load(f.weights);
  const Tensor x = load(f.calib);
  HessianAccumulator h(w.rows());
  h.accumulate(x);
  const Tensor wg = dequantize(gptq_quantize(w, h, cfg, p));
  const Tensor wr = dequantize(rtn_quantize_weights(w, cfg));
  const Tensor ref = kernels::matmul(x, w);
  Json params;
  params["weights"] = f.weights;
  params["calib"] = f.calib;
  params["format"] = f.format;
  params["damping"] = f.damping;
  params["lazy_block"] = f.lazy_block;
  params["act_order"] = f.act_order;
  if (!f.output.empty()) write_tensor(f.output, wg);
  em.json(f.report, report::gptq_report(std::move(params), mse(ref, kernels::matmul(x, wg)),
                                        mse(ref, kernels::matmul(x, wr)), mse(w, wg), mse(w, wr)));
  return kExitOk;
}

// ---------------------------------------------------------------- optimize

struct OptimizeFlags {
  std::string input;
  std::string format = "mxfp4";
  std::size_t steps = 200;
  double lr = 1.0;
  std::size_t calib_rows = 0;
  std::string output;
  std::string report;
  RotationFlags rot{"block", 32, std::nullopt, false};
};

void register_optimize(CLI::App& app, OptimizeFlags& f) {
  auto* c = app.add_subcommand("optimize", "Cayley-SGD refinement of a randomized Hadamard rotation");
  c->add_option("-i,--input", f.input, "Activation tensor file")->required();
  c->add_option("--format", f.format, "Format preset");
  c->add_option("--steps", f.steps, "Cayley steps");
  c->add_option("--lr", f.lr, "Step size");
  c->add_option("--calib-rows", f.calib_rows, "Use only the leading rows of the input (0 = all)");
  c->add_option("-o,--output", f.output, "Write the dense optimized rotation here");
  c->add_option("--report", f.report, "JSON report path (stdout when omitted)");
  add_rotation_flags(c, f.rot, "--rot");
}

int run_optimize(const OptimizeFlags& f, Emitter& em) {
  const QuantConfig cfg = parse_format(f.format, "--format");
  if (f.rot.rotation == "none") throw UsageError("--rot must be global or block");
  validate_rotation(f.rot);
  if (!(f.lr > 0)) throw UsageError("--lr must be positive");
  Tensor x = load(f.input);
  if (f.calib_rows > 0 && f.calib_rows < x.rows()) {
    std::vector<float> d(x.data().begin(), x.data().begin() + static_cast<std::ptrdiff_t>(f.calib_rows * x.cols()));
    x = Tensor(f.calib_rows, x.cols(), std::move(d));
  }
  const RotationSpec spec = *rotation_spec(f.rot, x.cols());
  const CayleyState st = optimize_rotation(x, build_rotation(spec, x.cols()), cfg, f.steps, f.lr);
  Json params = rotation_params(f.rot);
  params["input"] = f.input;
  params["format"] = f.format;
  params["lr"] = f.lr;
  params["calib_rows"] = f.calib_rows;
  if (!f.output.empty()) write_tensor(f.output, st.rotation.dense());
  em.json(f.report, report::optimize_report(std::move(params), st));
  return kExitOk;
}

// ---------------------------------------------------------------- matrix

struct MatrixFlags {
  std::string x;
  std::string w;
  std::string methods = "rtn,smoothquant,gptq,quarot,quarot+,brq";
  std::string formats = "mxfp4,mxint4,bfp4,bint4";
  std::optional<std::uint64_t> seed;
  double damping = 0.01;
  std::size_t spin_steps = 100;
  double spin_lr = 1.0;
  std::size_t spin_rows = 256;
  std::string report;
  std::string csv;
};

void register_matrix(CLI::App& app, MatrixFlags& f) {
  auto* c = app.add_subcommand("matrix", "Run methods x formats on one linear layer");
  c->add_option("-x", f.x, "Activation tensor file, tokens x in")->required();
  c->add_option("-w", f.w, "Weight tensor file, in x out")->required();
  c->add_option("--methods", f.methods, "Comma-separated: rtn, smoothquant, gptq, quarot, quarot+, brq, brq_spin");
  c->add_option("--formats", f.formats, "Comma-separated format presets");
  c->add_option("--seed", f.seed, "Rotation seed")->required();
  c->add_option("--damping", f.damping, "GPTQ damping fraction");
  c->add_option("--spin-steps", f.spin_steps, "brq_spin: Cayley steps");
  c->add_option("--spin-lr", f.spin_lr, "brq_spin: step size");
  c->add_option("--spin-rows", f.spin_rows, "brq_spin: leading rows used for the optimization (0 = all)");
  c->add_option("--report", f.report, "JSON report path (stdout when omitted)");
  c->add_option("--csv", f.csv, "CSV output path");
}

int run_matrix_cmd(const MatrixFlags& f, Emitter& em) {
  std::vector<MethodSpec> methods;
  for (const auto& name : split_list(f.methods)) {
    try {
      methods.push_back(MethodSpec::preset(name, *f.seed));
    } catch (const InvalidArgument& e) {
      throw UsageError(std::string("--methods: ") + e.what());
    }
    methods.back().gptq.damping_fraction = f.damping;
    if (methods.back().refine) *methods.back().refine = RotationRefinement{f.spin_steps, f.spin_lr, f.spin_rows};
  }
  std::vector<QuantConfig> formats;
  for (const auto& name : split_list(f.formats)) formats.push_back(parse_format(name, "--formats"));
  if (!(f.damping > 0)) throw UsageError("--damping must be positive");
  const Tensor x = load(f.x);
  const Tensor w = load(f.w);
  const auto results = run_matrix(x, w, methods, formats);
  Json params;
  params["x"] = f.x;
  params["w"] = f.w;
  params["methods"] = split_list(f.methods);
  params["formats"] = split_list(f.formats);
  params["seed"] = *f.seed;
  params["damping"] = f.damping;
  if (!f.csv.empty()) {
    std::ostringstream os;
    os << "method,act_format,weight_format,mse,qsnr_db,rotation_flops,matmul_flops\n";
    for (const auto& r : results) {
      os << r.method << ',' << r.act_format << ',' << r.weight_format << ',';
      os << report::number(r.output_mse).dump() << ',' << report::number(r.output_qsnr).dump() << ',';
      os << r.rotation_flops << ',' << r.matmul_flops << '\n';
    }
    em.csv(f.csv, os.str());
  }
  em.json(f.report, report::matrix_report(std::move(params), results));
  return kExitOk;
}

// ---------------------------------------------------------------- flops

struct FlopsFlags {
  std::size_t width = 4096;
  std::size_t rot_dim = 32;
  std::string report;
};

void register_flops(CLI::App& app, FlopsFlags& f) {
  auto* c = app.add_subcommand("flops", "Per-token FLOPs of global vs block-diagonal online rotation");
  c->add_option("--width", f.width, "Feature width N");
  c->add_option("--rot-dim", f.rot_dim, "Block width g");
  c->add_option("--report", f.report, "JSON report path (stdout when omitted)");
}

int run_flops(const FlopsFlags& f, Emitter& em) {
  if (f.width == 0 || f.rot_dim == 0 || f.width % f.rot_dim != 0)
    throw UsageError("--rot-dim must be positive and divide --width");
  Json params;
  params["width"] = f.width;
  params["rot_dim"] = f.rot_dim;
  em.json(f.report, report::flops_report(std::move(params), f.width, f.rot_dim));
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Microscaling 4-bit quantization and rotation experiments"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_version_flag("--version", "mxrot 0.1.0");

  GenFlags gen;
  QuantizeFlags quant;
  AnalyzeFlags analyze;
  AnalyzeFlags sweep;
  sweep.mode = "sweep";
  GptqFlags gptq;
  OptimizeFlags opt;
  MatrixFlags matrix;
  FlopsFlags flops;

  register_gen(app, gen);
  register_quantize(app, quant);
  register_analyze_flags(app.add_subcommand("analyze", "Block, threshold, sweep, scale and PoT diagnostics"), analyze,
                         true);
  register_analyze_flags(app.add_subcommand("sweep", "Rotation-dimension sweep (analyze --mode sweep)"), sweep, false);
  register_gptq(app, gptq);
  register_optimize(app, opt);
  register_matrix(app, matrix);
  register_flops(app, flops);

  std::vector<const char*> argv;
  argv.push_back("mxrot");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  Emitter em(out);
  try {
    configure_threads_from_env();
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  try {
    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "gen") return run_gen(gen, em);
    if (cmd == "quantize") return run_quantize(quant, em);
    if (cmd == "analyze") return run_analyze(analyze, em);
    if (cmd == "sweep") return run_analyze(sweep, em);
    if (cmd == "gptq") return run_gptq(gptq, em);
    if (cmd == "optimize") return run_optimize(opt, em);
    if (cmd == "matrix") return run_matrix_cmd(matrix, em);
    if (cmd == "flops") return run_flops(flops, em);
    err << "error: unknown subcommand " << cmd << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitComputation;
  }
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace mxrot::cli
