#pragma once

#include <cstdint>
#include <filesystem>

#include "mxrot/tensor.hpp"

namespace mxrot {

/// Parameters of the channel-outlier activation stand-in.
struct SyntheticSpec {
  std::size_t rows = 0;
  std::size_t cols = 0;
  double base_std = 1.0;
  double outlier_channel_fraction = 0.0;
  double outlier_gain = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
  /// floor(outlier_channel_fraction * cols)
  std::size_t outlier_channel_count() const;
};

/// N(0, base_std) entries with floor(fraction * cols) seed-chosen columns
/// multiplied by outlier_gain. Pure function of the spec.
Tensor generate_synthetic(const SyntheticSpec& spec);

/// Sorted indices of the columns generate_synthetic scales for `spec`.
std::vector<std::size_t> outlier_channels(const SyntheticSpec& spec);

/// Gaussian matrix with the given std, e.g. a weight stand-in.
Tensor generate_gaussian(std::size_t rows, std::size_t cols, double std, std::uint64_t seed);

// File format (little-endian): "MXTB", u32 version = 1, u64 rows, u64 cols,
// then rows*cols binary32 values row-major.
inline constexpr char kTensorMagic[4] = {'M', 'X', 'T', 'B'};
inline constexpr std::uint32_t kTensorVersion = 1;
inline constexpr std::size_t kTensorHeaderBytes = 4 + 4 + 8 + 8;

Tensor read_tensor(const std::filesystem::path& path);
/// Writes to a temporary sibling file and renames it into place.
void write_tensor(const std::filesystem::path& path, const Tensor& t);

Tensor decode_tensor(std::span<const unsigned char> bytes);
std::vector<unsigned char> encode_tensor(const Tensor& t);

}  // namespace mxrot
