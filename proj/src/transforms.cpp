#include "mxrot/transforms.hpp"

#include <bit>
#include <cmath>

#include "mxrot/errors.hpp"
#include "mxrot/kernels.hpp"
#include "mxrot/rng.hpp"

namespace mxrot {

bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

std::string to_string(RotationScope s) { return s == RotationScope::Global ? "global" : "block"; }

void RotationSpec::validate() const {
  if (!is_power_of_two(dim))
    throw InvalidArgument("rotation dimension " + std::to_string(dim) +
                          " is not a power of two (Sylvester Hadamard only)");
}

RotationMatrix::RotationMatrix(RotationSpec spec, std::vector<Tensor> blocks)
    : spec_(spec), blocks_(std::move(blocks)) {
  if (blocks_.empty()) throw InvalidArgument("rotation needs at least one block");
  const std::size_t g = blocks_.front().rows();
  for (const auto& b : blocks_)
    if (b.rows() != g || b.cols() != g) throw InvalidArgument("rotation blocks must all be g x g");
}

RotationMatrix RotationMatrix::identity(std::size_t width, std::size_t g) {
  if (g == 0 || width % g != 0) throw InvalidArgument("identity rotation: block width must divide width");
  RotationSpec spec{g == width ? RotationScope::Global : RotationScope::BlockDiagonal, g, 0, false};
  return RotationMatrix(spec, std::vector<Tensor>(width / g, Tensor::identity(g)));
}

RotationMatrix RotationMatrix::with_block(std::size_t i, Tensor block) const {
  std::vector<Tensor> blocks = blocks_;
  blocks.at(i) = std::move(block);
  return RotationMatrix(spec_, std::move(blocks));
}

Tensor RotationMatrix::dense() const {
  const std::size_t n = width();
  const std::size_t g = block_dim();
  std::vector<float> d(n * n, 0.0f);
  for (std::size_t b = 0; b < blocks_.size(); ++b)
    for (std::size_t i = 0; i < g; ++i)
      for (std::size_t j = 0; j < g; ++j) d[(b * g + i) * n + b * g + j] = blocks_[b](i, j);
  return Tensor(n, n, std::move(d));
}

double RotationMatrix::orthogonality_error() const {
  double worst = 0.0;
  for (const auto& b : blocks_) {
    const std::size_t g = b.rows();
    for (std::size_t i = 0; i < g; ++i)
      for (std::size_t j = i; j < g; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < g; ++k) acc += static_cast<double>(b(k, i)) * static_cast<double>(b(k, j));
        worst = std::max(worst, std::fabs(acc - (i == j ? 1.0 : 0.0)));
      }
  }
  return worst;
}

Tensor hadamard(std::size_t n) {
  if (!is_power_of_two(n)) throw InvalidArgument("hadamard order must be a power of two");
  std::vector<float> h(n * n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) h[r * n + c] = (std::popcount(r & c) & 1) ? -1.0f : 1.0f;
  return Tensor(n, n, std::move(h));
}

RotationMatrix build_rotation(const RotationSpec& spec, std::size_t width) {
  spec.validate();
  const std::size_t g = spec.dim;
  if (spec.scope == RotationScope::Global && g != width)
    throw InvalidArgument("global rotation dimension " + std::to_string(g) + " must equal the width " +
                          std::to_string(width));
  if (width % g != 0)
    throw InvalidArgument("rotation block width " + std::to_string(g) + " does not divide width " +
                          std::to_string(width));
  const Tensor h = hadamard(g);
  const float norm = static_cast<float>(1.0 / std::sqrt(static_cast<double>(g)));
  std::vector<Tensor> blocks;
  blocks.reserve(width / g);
  for (std::size_t b = 0; b < width / g; ++b) {
    const CounterRng rng(spec.seed, b);
    std::vector<float> sign(g, 1.0f);
    if (spec.randomized)
      for (std::size_t c = 0; c < g; ++c) sign[c] = (rng.at(c) >> 63) ? -1.0f : 1.0f;
    std::vector<float> d(g * g);
    for (std::size_t r = 0; r < g; ++r)
      for (std::size_t c = 0; c < g; ++c) d[r * g + c] = h(r, c) * sign[c] * norm;
    blocks.emplace_back(g, g, std::move(d));
  }
  return RotationMatrix(spec, std::move(blocks));
}

Tensor rotate_activations(const Tensor& x, const RotationMatrix& r) {
  if (x.cols() != r.width())
    throw InvalidArgument("rotate_activations: tensor width " + std::to_string(x.cols()) +
                          " does not match rotation width " + std::to_string(r.width()));
  return kernels::block_diag_right(x, r.blocks());
}

Tensor rotate_weights(const Tensor& w, const RotationMatrix& r) {
  if (w.rows() != r.width())
    throw InvalidArgument("rotate_weights: weight input dimension " + std::to_string(w.rows()) +
                          " does not match rotation width " + std::to_string(r.width()));
  return kernels::block_diag_left_transposed(w, r.blocks());
}

SmoothSpec smooth_scales(const Tensor& x_calib, const Tensor& w, double alpha) {
  if (x_calib.cols() != w.rows())
    throw InvalidArgument("smooth_scales: activation width " + std::to_string(x_calib.cols()) +
                          " does not match weight input dimension " + std::to_string(w.rows()));
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("smooth_scales: alpha must lie in [0, 1]");
  const std::size_t n = w.rows();
  std::vector<double> xmax(n, 0.0);
  for (std::size_t r = 0; r < x_calib.rows(); ++r)
    for (std::size_t j = 0; j < n; ++j) xmax[j] = std::max(xmax[j], std::fabs(static_cast<double>(x_calib(r, j))));
  SmoothSpec out;
  out.alpha = alpha;
  out.scales.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    double wmax = 0.0;
    for (float v : w.row(j)) wmax = std::max(wmax, std::fabs(static_cast<double>(v)));
    const bool degenerate = (wmax == 0.0 && alpha < 1.0) || (xmax[j] == 0.0 && alpha > 0.0);
    const double s = degenerate ? 1.0 : std::pow(xmax[j], alpha) / std::pow(wmax, 1.0 - alpha);
    out.scales[j] = static_cast<float>(s);
    if (!(out.scales[j] > 0.0f) || !std::isfinite(out.scales[j]))
      throw NumericalError("smooth_scales: channel " + std::to_string(j) + " produced a non-representable factor");
  }
  return out;
}

Tensor smooth_activations(const Tensor& x, const SmoothSpec& s) {
  if (s.scales.size() != x.cols()) throw InvalidArgument("smooth_activations: width mismatch");
  std::vector<float> out(x.size());
  const std::size_t n = x.cols();
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t j = 0; j < n; ++j) out[r * n + j] = x(r, j) / s.scales[j];
  return Tensor(x.rows(), n, std::move(out));
}

Tensor smooth_weights(const Tensor& w, const SmoothSpec& s) {
  if (s.scales.size() != w.rows()) throw InvalidArgument("smooth_weights: height mismatch");
  std::vector<float> out(w.size());
  const std::size_t n = w.cols();
  for (std::size_t r = 0; r < w.rows(); ++r)
    for (std::size_t j = 0; j < n; ++j) out[r * n + j] = w(r, j) * s.scales[r];
  return Tensor(w.rows(), n, std::move(out));
}

std::uint64_t online_rotation_flops(std::size_t width, RotationScope scope, std::size_t g) {
  const auto n = static_cast<std::uint64_t>(width);
  if (scope == RotationScope::Global) return 2 * n * n;
  if (g == 0 || width % g != 0) throw InvalidArgument("online_rotation_flops: block width must divide width");
  return 2 * n * static_cast<std::uint64_t>(g);
}

}  // namespace mxrot
