#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mxrot {

/// Dense row-major matrix of binary32 values.
///
/// A constructed Tensor always has rows, cols > 0 and only finite entries;
/// the constructor rejects anything else. The only exception is the
/// default-constructed (empty, 0x0) value, which exists so tensors can live
/// in containers and be moved from.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, std::vector<float> data);

  static Tensor zeros(std::size_t rows, std::size_t cols);
  static Tensor identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<const float> data() const noexcept { return data_; }
  std::span<const float> row(std::size_t r) const noexcept {
    return std::span<const float>(data_).subspan(r * cols_, cols_);
  }
  float operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  Tensor transposed() const;

  /// Moves the storage out, leaving an empty tensor.
  std::vector<float> release() && noexcept;

  friend bool operator==(const Tensor& a, const Tensor& b) noexcept;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> data_;
};

/// True when both tensors have the same shape and identical bit patterns.
bool bitwise_equal(const Tensor& a, const Tensor& b) noexcept;

}  // namespace mxrot
