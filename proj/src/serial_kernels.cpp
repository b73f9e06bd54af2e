#include <algorithm>
#include <cmath>
#include <string>

#include "mxrot/errors.hpp"
#include "mxrot/serial.hpp"

namespace mxrot::serial {

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) throw InvalidArgument("serial::matmul: inner dimensions differ");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<float> c(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      float acc = 0.0f;
      for (std::size_t p = 0; p < k; ++p) acc += a(i, p) * b(p, j);
      c[i * n + j] = acc;
    }
  return Tensor(m, n, std::move(c));
}

std::vector<double> gram(const Tensor& x) {
  const std::size_t n = x.cols();
  std::vector<double> h(n * n);
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = p; q < n; ++q) {
      double acc = 0.0;
      for (std::size_t r = 0; r < x.rows(); ++r) acc += static_cast<double>(x(r, p)) * static_cast<double>(x(r, q));
      h[p * n + q] = h[q * n + p] = acc;
    }
  return h;
}

Tensor block_diag_right(const Tensor& x, std::span<const Tensor> blocks) {
  const std::size_t g = blocks.empty() ? 0 : blocks.front().rows();
  if (g == 0 || g * blocks.size() != x.cols()) throw InvalidArgument("serial::block_diag_right: width mismatch");
  std::vector<float> out(x.size());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t b = 0; b < blocks.size(); ++b)
      for (std::size_t j = 0; j < g; ++j) {
        float acc = 0.0f;
        for (std::size_t i = 0; i < g; ++i) acc += x(r, b * g + i) * blocks[b](i, j);
        out[r * x.cols() + b * g + j] = acc;
      }
  return Tensor(x.rows(), x.cols(), std::move(out));
}

Tensor block_diag_left_transposed(const Tensor& w, std::span<const Tensor> blocks) {
  const std::size_t g = blocks.empty() ? 0 : blocks.front().rows();
  if (g == 0 || g * blocks.size() != w.rows())
    throw InvalidArgument("serial::block_diag_left_transposed: height mismatch");
  std::vector<float> out(w.size());
  for (std::size_t b = 0; b < blocks.size(); ++b)
    for (std::size_t j = 0; j < g; ++j)
      for (std::size_t c = 0; c < w.cols(); ++c) {
        float acc = 0.0f;
        for (std::size_t i = 0; i < g; ++i) acc += blocks[b](i, j) * w(b * g + i, c);
        out[(b * g + j) * w.cols() + c] = acc;
      }
  return Tensor(w.rows(), w.cols(), std::move(out));
}

QuantizedTensor quantize(const Tensor& t, const QuantConfig& cfg, BlockDirection direction) {
  QuantizedTensor q;
  q.config = cfg;
  q.direction = direction;
  q.rows = t.rows();
  q.cols = t.cols();
  q.codes.assign(t.size(), 0);
  const bool along_cols = direction == BlockDirection::AlongColumns;
  const std::size_t lines = along_cols ? q.rows : q.cols;
  const std::size_t line_len = along_cols ? q.cols : q.rows;
  const std::size_t bs = cfg.effective_block(line_len);
  q.scales.resize(lines * q.blocks_per_line());
  for (std::size_t line = 0; line < lines; ++line) {
    for (std::size_t start = 0; start < line_len; start += bs) {
      const std::size_t len = std::min(bs, line_len - start);
      std::vector<float> block(len);
      for (std::size_t i = 0; i < len; ++i)
        block[i] = along_cols ? t(line, start + i) : t(start + i, line);
      const float s = block_scale(block, cfg);
      const std::size_t r0 = along_cols ? line : start;
      const std::size_t c0 = along_cols ? start : line;
      q.scales[q.scale_index(r0, c0)] = s;
      for (std::size_t i = 0; i < len; ++i) {
        const std::size_t r = along_cols ? line : start + i;
        const std::size_t c = along_cols ? start + i : line;
        q.codes[r * q.cols + c] = encode_nearest(cfg.element, block[i], s);
      }
    }
  }
  return q;
}

}  // namespace mxrot::serial
