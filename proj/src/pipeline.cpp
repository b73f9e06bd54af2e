#include "mxrot/pipeline.hpp"

#include <algorithm>

#include "mxrot/errors.hpp"
#include "mxrot/kernels.hpp"
#include "mxrot/rotopt.hpp"

namespace mxrot {

std::string to_string(Compensator c) { return c == Compensator::RTN ? "rtn" : "gptq"; }

const std::vector<std::string>& MethodSpec::preset_names() {
  static const std::vector<std::string> names = {"rtn", "smoothquant", "gptq", "quarot", "quarot+", "brq", "brq_spin"};
  return names;
}

MethodSpec MethodSpec::preset(const std::string& name, std::uint64_t seed) {
  MethodSpec m;
  m.name = name;
  const RotationSpec global{RotationScope::Global, 0, seed, true};
  const RotationSpec block{RotationScope::BlockDiagonal, 32, seed, true};
  if (name == "rtn") {
  } else if (name == "smoothquant") {
    m.smoothing_alpha = 0.85;
  } else if (name == "gptq") {
    m.compensator = Compensator::GPTQ;
  } else if (name == "quarot") {
    m.rotation = global;
  } else if (name == "quarot+" || name == "quarot_plus") {
    m.name = "quarot+";
    m.rotation = global;
    m.compensator = Compensator::GPTQ;
  } else if (name == "brq") {
    m.rotation = block;
    m.compensator = Compensator::GPTQ;
  } else if (name == "brq_spin") {
    m.rotation = block;
    m.refine = RotationRefinement{};
    m.compensator = Compensator::GPTQ;
  } else {
    std::string valid;
    for (const auto& n : preset_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw InvalidArgument("unknown method '" + name + "' (valid: " + valid + ")");
  }
  return m;
}

MethodSpec MethodSpec::with_formats(const std::optional<QuantConfig>& act,
                                    const std::optional<QuantConfig>& weight) const {
  MethodSpec m = *this;
  m.act_cfg = act;
  m.weight_cfg = weight;
  return m;
}

namespace {

std::string format_name(const std::optional<QuantConfig>& cfg) { return cfg ? cfg->name() : "none"; }

Tensor leading_rows(const Tensor& x, std::size_t n) {
  if (n == 0 || n >= x.rows()) return x;
  std::vector<float> d(x.data().begin(), x.data().begin() + static_cast<std::ptrdiff_t>(n * x.cols()));
  return Tensor(n, x.cols(), std::move(d));
}

}  // namespace

LayerResult run_layer(const Tensor& x, const Tensor& w, const MethodSpec& method, const Tensor& reference) {
  if (x.cols() != w.rows())
    throw InvalidArgument("run_layer: X has " + std::to_string(x.cols()) + " columns but W has " +
                          std::to_string(w.rows()) + " rows");
  if (reference.rows() != x.rows() || reference.cols() != w.cols())
    throw InvalidArgument("run_layer: reference shape does not match X W");
  method.gptq.validate();

  LayerResult res;
  res.method = method.name;
  res.act_format = format_name(method.act_cfg);
  res.weight_format = format_name(method.weight_cfg);
  res.matmul_flops = 2ULL * x.rows() * x.cols() * w.cols();

  Tensor xt = x;
  Tensor wt = w;
  if (method.smoothing_alpha) {
    const SmoothSpec s = smooth_scales(xt, wt, *method.smoothing_alpha);
    xt = smooth_activations(xt, s);
    wt = smooth_weights(wt, s);
  }
  if (method.rotation) {
    RotationSpec spec = *method.rotation;
    if (spec.scope == RotationScope::Global && spec.dim == 0) spec.dim = xt.cols();
    RotationMatrix r = build_rotation(spec, xt.cols());
    if (method.refine && method.act_cfg) {
      const auto& rf = *method.refine;
      r = optimize_rotation(leading_rows(xt, rf.calib_rows), std::move(r), *method.act_cfg, rf.steps, rf.step_size)
              .rotation;
    }
    xt = rotate_activations(xt, r);
    wt = rotate_weights(wt, r);
    res.rotation_flops = online_rotation_flops(xt.cols(), spec.scope, spec.dim) * x.rows();
  }

  Tensor wq = wt;
  if (method.weight_cfg) {
    if (method.compensator == Compensator::GPTQ) {
      HessianAccumulator h(xt.cols());
      h.accumulate(xt);
      wq = dequantize(gptq_quantize(wt, h, *method.weight_cfg, method.gptq));
    } else {
      wq = fake_quantize(wt, *method.weight_cfg, BlockDirection::AlongRows);
    }
  }
  const Tensor xq = method.act_cfg ? fake_quantize(xt, *method.act_cfg) : std::move(xt);
  const Tensor y = kernels::matmul(xq, wq);
  res.output_mse = mse(reference, y);
  res.output_qsnr = qsnr(reference, y);
  return res;
}

LayerResult run_layer(const Tensor& x, const Tensor& w, const MethodSpec& method) {
  if (x.cols() != w.rows())
    throw InvalidArgument("run_layer: X has " + std::to_string(x.cols()) + " columns but W has " +
                          std::to_string(w.rows()) + " rows");
  return run_layer(x, w, method, kernels::matmul(x, w));
}

std::vector<LayerResult> run_matrix(const Tensor& x, const Tensor& w, const std::vector<MethodSpec>& methods,
                                    const std::vector<QuantConfig>& formats) {
  std::vector<LayerResult> out;
  if (methods.empty() || formats.empty()) return out;
  if (x.cols() != w.rows())
    throw InvalidArgument("run_matrix: X has " + std::to_string(x.cols()) + " columns but W has " +
                          std::to_string(w.rows()) + " rows");
  const Tensor reference = kernels::matmul(x, w);
  for (const auto& m : methods)
    for (const auto& f : formats) out.push_back(run_layer(x, w, m.with_formats(f, f), reference));
  return out;
}

}  // namespace mxrot
