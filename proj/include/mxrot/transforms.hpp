#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mxrot/tensor.hpp"

namespace mxrot {

enum class RotationScope : std::uint8_t { Global, BlockDiagonal };

struct RotationSpec {
  RotationScope scope = RotationScope::BlockDiagonal;
  /// Full width N for Global, block width g for BlockDiagonal. Power of two.
  std::size_t dim = 32;
  std::uint64_t seed = 0;
  /// Multiply each Hadamard block by a seed-derived random +-1 diagonal.
  bool randomized = true;

  void validate() const;
};

/// Block-diagonal orthogonal matrix diag(R_0, ..., R_{B-1}) stored as dense
/// g x g blocks; a global rotation is the single-block case.
///
/// Blocks are assumed orthogonal. build_rotation and the Cayley update keep
/// them so; orthogonality_error() measures it.
class RotationMatrix {
 public:
  RotationMatrix(RotationSpec spec, std::vector<Tensor> blocks);

  /// Exact identity with blocks of width g.
  static RotationMatrix identity(std::size_t width, std::size_t g);

  const RotationSpec& spec() const noexcept { return spec_; }
  std::size_t block_dim() const noexcept { return blocks_.front().rows(); }
  std::size_t block_count() const noexcept { return blocks_.size(); }
  std::size_t width() const noexcept { return block_dim() * block_count(); }
  std::span<const Tensor> blocks() const noexcept { return blocks_; }
  const Tensor& block(std::size_t i) const { return blocks_.at(i); }

  /// A copy with block i replaced.
  RotationMatrix with_block(std::size_t i, Tensor block) const;

  /// Materialized width x width matrix.
  Tensor dense() const;

  /// max over blocks of max |R_i^T R_i - I|, in binary64.
  double orthogonality_error() const;

 private:
  RotationSpec spec_;
  std::vector<Tensor> blocks_;
};

/// Order-n Sylvester Hadamard matrix with +-1 entries; n a power of two.
Tensor hadamard(std::size_t n);

/// Builds the rotation for a tensor of `width` features. Each block is
/// (1/sqrt(g)) H_g D_i with D_i drawn from stream i of the seed, so a
/// BlockDiagonal spec with g = N reproduces the Global one.
/// Throws when dim is not a power of two or does not divide width.
RotationMatrix build_rotation(const RotationSpec& spec, std::size_t width);

/// x R, row-wise.
Tensor rotate_activations(const Tensor& x, const RotationMatrix& r);
/// R^T W for W of shape in_features x out_features, so (xR)(R^T W) = xW.
Tensor rotate_weights(const Tensor& w, const RotationMatrix& r);

/// Per-channel smoothing factors: X' = X diag(1/s), W' = diag(s) W.
struct SmoothSpec {
  double alpha = 0.85;
  std::vector<float> scales;
};

/// s_j = max|X_:,j|^alpha / max|W_j,:|^(1 - alpha); channels with a zero max get s_j = 1.
SmoothSpec smooth_scales(const Tensor& x_calib, const Tensor& w, double alpha = 0.85);
Tensor smooth_activations(const Tensor& x, const SmoothSpec& s);
Tensor smooth_weights(const Tensor& w, const SmoothSpec& s);

/// Dense-multiply FLOPs per token of an online rotation: 2N^2 global, 2Ng block-diagonal.
std::uint64_t online_rotation_flops(std::size_t width, RotationScope scope, std::size_t g = 0);

bool is_power_of_two(std::size_t n) noexcept;
std::string to_string(RotationScope s);

}  // namespace mxrot
