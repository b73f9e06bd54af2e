#include "mxrot/gptq.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mxrot/errors.hpp"
#include "mxrot/kernels.hpp"

namespace mxrot {

namespace {
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
}

HessianAccumulator::HessianAccumulator(std::size_t width) : width_(width), h_(width * width, 0.0) {
  if (width == 0) throw InvalidArgument("hessian width must be positive");
}

HessianAccumulator HessianAccumulator::from_matrix(std::vector<double> h, std::size_t width,
                                                   std::size_t n_samples) {
  if (width == 0 || h.size() != width * width) throw InvalidArgument("hessian matrix must be width x width");
  for (std::size_t i = 0; i < width; ++i) {
    if (h[i * width + i] < 0.0) throw InvalidArgument("hessian diagonal must be nonnegative");
    for (std::size_t j = i + 1; j < width; ++j)
      if (std::fabs(h[i * width + j] - h[j * width + i]) > 1e-10 * (1.0 + std::fabs(h[i * width + j])))
        throw InvalidArgument("hessian matrix must be symmetric");
  }
  HessianAccumulator acc(width);
  acc.h_ = std::move(h);
  acc.n_samples_ = n_samples;
  return acc;
}

void HessianAccumulator::accumulate(const Tensor& x_batch) {
  if (x_batch.cols() != width_)
    throw InvalidArgument("accumulate_hessian: batch width " + std::to_string(x_batch.cols()) +
                          " does not match hessian width " + std::to_string(width_));
  const auto g = kernels::gram(x_batch);
  for (std::size_t i = 0; i < h_.size(); ++i) h_[i] += 2.0 * g[i];
  n_samples_ += x_batch.rows();
}

HessianAccumulator accumulate_hessian(HessianAccumulator acc, const Tensor& x_batch) {
  acc.accumulate(x_batch);
  return acc;
}

void GptqParams::validate() const {
  if (!(damping_fraction > 0.0) || !std::isfinite(damping_fraction))
    throw InvalidArgument("gptq damping fraction must be positive");
  if (lazy_block == 0) throw InvalidArgument("gptq lazy block must be positive");
}

QuantizedTensor rtn_quantize_weights(const Tensor& w, const QuantConfig& cfg) {
  return quantize(w, cfg, BlockDirection::AlongRows);
}

QuantizedTensor gptq_quantize(const Tensor& w, const HessianAccumulator& acc, const QuantConfig& cfg,
                              const GptqParams& params) {
  params.validate();
  const std::size_t n = w.rows();
  const std::size_t out = w.cols();
  if (n != acc.width())
    throw InvalidArgument("gptq: weight input dimension " + std::to_string(n) + " does not match hessian width " +
                          std::to_string(acc.width()));
  if (acc.n_samples() == 0) throw InvalidArgument("gptq: hessian has no calibration samples");

  // Processing order: identity, or descending diag(H) for act_order.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (params.act_order)
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return acc(a, a) > acc(b, b); });

  // Working copies in processing order: H (binary64), W rows (binary32).
  RowMatrix h(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) h(i, j) = acc(order[i], order[j]);
  std::vector<float> wk(n * out);
  for (std::size_t i = 0; i < n; ++i) std::copy_n(w.data().data() + order[i] * out, out, wk.data() + i * out);

  for (std::size_t i = 0; i < n; ++i) {
    if (h(i, i) == 0.0) {  // dimension never excited by calibration data
      h(i, i) = 1.0;
      std::fill_n(wk.data() + i * out, out, 0.0f);
    }
  }
  const double lambda = params.damping_fraction * h.diagonal().mean();
  h.diagonal().array() += lambda;

  const Eigen::LLT<RowMatrix> llt(h);
  if (llt.info() != Eigen::Success)
    throw NumericalError("gptq: Hessian is not positive definite after damping " +
                         std::to_string(params.damping_fraction) + "; increase --damping");
  RowMatrix hinv = llt.solve(RowMatrix::Identity(n, n));
  hinv = (0.5 * (hinv + hinv.transpose())).eval();
  const Eigen::LLT<RowMatrix> llt_inv(hinv);
  if (llt_inv.info() != Eigen::Success)
    throw NumericalError("gptq: inverse Hessian factorization failed; increase --damping");
  // ut(r, c) = U(c, r) with U the upper factor of H^-1 = U^T U.
  const RowMatrix lower = llt_inv.matrixL();
  std::vector<float> ut(n * n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) ut[r * n + c] = static_cast<float>(lower(r, c));
  auto u = [&](std::size_t row, std::size_t col) { return ut[col * n + row]; };

  QuantizedTensor q;
  q.config = cfg;
  q.direction = BlockDirection::AlongRows;
  q.rows = n;
  q.cols = out;
  q.codes.assign(n * out, 0);
  const std::size_t bs = cfg.effective_block(n);
  q.scales.assign(q.blocks_per_line() * out, 0.0f);
  const ElementKind kind = cfg.element;

  if (params.act_order) {
    const QuantizedTensor fixed = quantize(w, cfg, BlockDirection::AlongRows);
    q.scales = fixed.scales;
  }

  std::vector<float> block_scales(out);
  std::vector<float> err_block;
  std::vector<float> amax(out);
  for (std::size_t i1 = 0; i1 < n; i1 += params.lazy_block) {
    const std::size_t i2 = std::min(n, i1 + params.lazy_block);
    err_block.assign((i2 - i1) * out, 0.0f);
    for (std::size_t j = i1; j < i2; ++j) {
      const std::size_t orig = order[j];
      float* wj = wk.data() + j * out;

      if (!params.act_order && j % bs == 0) {
        // Scales from the current weights of dimensions [j, j + bs). Rows past
        // the lazy block still miss this block's pending updates; add them here.
        std::fill(amax.begin(), amax.end(), 0.0f);
        const std::size_t g1 = std::min(n, j + bs);
        std::vector<float> row(out);
        for (std::size_t r = j; r < g1; ++r) {
          std::copy_n(wk.data() + r * out, out, row.data());
          if (r >= i2) {
            for (std::size_t p = i1; p < j; ++p) {
              const float coef = u(p, r);
              const float* e = err_block.data() + (p - i1) * out;
              for (std::size_t o = 0; o < out; ++o) row[o] -= coef * e[o];
            }
          }
          for (std::size_t o = 0; o < out; ++o) amax[o] = std::max(amax[o], std::fabs(row[o]));
        }
        for (std::size_t o = 0; o < out; ++o) q.scales[(j / bs) * out + o] = scale_for_amax(amax[o], cfg);
      }
      for (std::size_t o = 0; o < out; ++o) block_scales[o] = q.scales[(orig / bs) * out + o];

      const float d = u(j, j);
      float* ej = err_block.data() + (j - i1) * out;
      for (std::size_t o = 0; o < out; ++o) {
        const std::uint8_t code = encode_nearest(kind, wj[o], block_scales[o]);
        q.codes[orig * out + o] = code;
        const float qv = decode_code(kind, code) * block_scales[o];
        ej[o] = (wj[o] - qv) / d;
      }
      for (std::size_t r = j + 1; r < i2; ++r) {
        const float coef = u(j, r);
        float* wr = wk.data() + r * out;
#pragma omp simd
        for (std::size_t o = 0; o < out; ++o) wr[o] -= coef * ej[o];
      }
    }
    if (i2 < n) {
      // W[i2:, :] -= U[i1:i2, i2:]^T * Err
      kernels::gemm(ut.data() + i2 * n + i1, n, err_block.data(), out, wk.data() + i2 * out, out, n - i2, i2 - i1,
                    out, -1.0f, true);
    }
  }
  return q;
}

}  // namespace mxrot
