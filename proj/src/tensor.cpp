#include "mxrot/tensor.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "mxrot/errors.hpp"

namespace mxrot {

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<float> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (rows == 0 || cols == 0) {
    throw InvalidArgument("tensor shape must be positive, got " + std::to_string(rows) + "x" +
                          std::to_string(cols));
  }
  if (data_.size() != rows * cols) {
    throw InvalidArgument("tensor data length " + std::to_string(data_.size()) +
                          " does not match shape " + std::to_string(rows) + "x" +
                          std::to_string(cols));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw InvalidArgument("tensor entry " + std::to_string(i) + " is not finite");
    }
  }
}

Tensor Tensor::zeros(std::size_t rows, std::size_t cols) {
  return Tensor(rows, cols, std::vector<float>(rows * cols, 0.0f));
}

Tensor Tensor::identity(std::size_t n) {
  std::vector<float> d(n * n, 0.0f);
  for (std::size_t i = 0; i < n; ++i) d[i * n + i] = 1.0f;
  return Tensor(n, n, std::move(d));
}

Tensor Tensor::transposed() const {
  std::vector<float> out(data_.size());
  constexpr std::size_t kTile = 32;
  for (std::size_t r0 = 0; r0 < rows_; r0 += kTile) {
    for (std::size_t c0 = 0; c0 < cols_; c0 += kTile) {
      const std::size_t r1 = std::min(rows_, r0 + kTile);
      const std::size_t c1 = std::min(cols_, c0 + kTile);
      for (std::size_t r = r0; r < r1; ++r)
        for (std::size_t c = c0; c < c1; ++c) out[c * rows_ + r] = data_[r * cols_ + c];
    }
  }
  return Tensor(cols_, rows_, std::move(out));
}

std::vector<float> Tensor::release() && noexcept {
  rows_ = cols_ = 0;
  return std::move(data_);
}

bool operator==(const Tensor& a, const Tensor& b) noexcept {
  return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
}

bool bitwise_equal(const Tensor& a, const Tensor& b) noexcept {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return a.size() == 0 ||
         std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(float)) == 0;
}

}  // namespace mxrot
