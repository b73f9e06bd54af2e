#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mxrot/tensor.hpp"

namespace mxrot {

enum class ElementKind : std::uint8_t { FP4_E2M1, INT4 };

/// POT_E8M0: 2^e, e in [-127, 127]. FP16: binary16 value of amax / max_code.
/// FP32: binary32 amax / max_code, used only by the per-channel INT4 cell.
enum class ScaleKind : std::uint8_t { POT_E8M0, FP16, FP32 };

/// How blocks tile a 2-D tensor. Activations (tokens x features) are blocked
/// along columns; weights (in_features x out_features) are blocked along rows,
/// so that both group the reduction dimension of X * W.
enum class BlockDirection : std::uint8_t { AlongColumns, AlongRows };

struct ElementFormat {
  ElementKind kind = ElementKind::FP4_E2M1;

  /// 6 for E2M1, 7 for symmetric INT4.
  double max_code_value() const noexcept { return kind == ElementKind::FP4_E2M1 ? 6.0 : 7.0; }
  /// Exponent of the largest power of two not exceeding max_code_value; drives the PoT scale rule.
  int emax() const noexcept { return 2; }
};

struct QuantConfig {
  ElementKind element = ElementKind::FP4_E2M1;
  ScaleKind scale = ScaleKind::POT_E8M0;
  /// Elements per block; 0 means one block spans the whole line.
  std::size_t block_size = 32;

  static QuantConfig mxfp4() { return {ElementKind::FP4_E2M1, ScaleKind::POT_E8M0, 32}; }
  static QuantConfig mxint4() { return {ElementKind::INT4, ScaleKind::POT_E8M0, 32}; }
  static QuantConfig bfp4() { return {ElementKind::FP4_E2M1, ScaleKind::FP16, 32}; }
  static QuantConfig bint4() { return {ElementKind::INT4, ScaleKind::FP16, 32}; }
  /// Plain INT4: one symmetric scale per row (activations) / output channel (weights).
  static QuantConfig int4_per_channel() { return {ElementKind::INT4, ScaleKind::FP32, 0}; }

  /// Accepts mxfp4 | mxint4 | bfp4 | bint4 | int4; throws InvalidArgument
  /// listing the valid names otherwise.
  static QuantConfig from_name(std::string_view name);
  static const std::vector<std::string>& preset_names();

  ElementFormat element_format() const noexcept { return {element}; }
  /// Preset name when the config matches one, else a descriptive string.
  std::string name() const;
  std::size_t effective_block(std::size_t line_length) const noexcept {
    return block_size == 0 ? line_length : block_size;
  }

  friend bool operator==(const QuantConfig&, const QuantConfig&) = default;
};

/// Per-element 4-bit codes plus one scale per block.
///
/// E2M1 codes are the format's bit patterns (sign in bit 3, exponent in bits
/// 2..1, mantissa in bit 0); INT4 codes are 4-bit two's complement in [-7, 7].
/// Zero is always stored as code 0.
struct QuantizedTensor {
  QuantConfig config;
  BlockDirection direction = BlockDirection::AlongColumns;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> codes;  // rows * cols, row-major
  std::vector<float> scales;

  std::size_t block_len() const noexcept {
    return config.effective_block(direction == BlockDirection::AlongColumns ? cols : rows);
  }
  /// Number of blocks along one line (row for AlongColumns, column for AlongRows).
  std::size_t blocks_per_line() const noexcept;
  std::size_t scale_index(std::size_t r, std::size_t c) const noexcept;
  std::uint8_t code(std::size_t r, std::size_t c) const noexcept { return codes[r * cols + c]; }
};

/// The 16 E2M1 values indexed by code: +0, 0.5, 1, 1.5, 2, 3, 4, 6, -0, -0.5, ..., -6.
std::array<float, 16> e2m1_values();

/// Real value of a 4-bit code (before scaling).
float decode_code(ElementKind kind, std::uint8_t code) noexcept;

/// Code of the representable value nearest to x / scale; ties go to the even
/// code, magnitudes past the largest code saturate.
std::uint8_t encode_nearest(ElementKind kind, double x, double scale) noexcept;

/// Code with the opposite sign (zero maps to itself).
std::uint8_t negate_code(ElementKind kind, std::uint8_t code) noexcept;

/// floor(log2(amax)) - 2 clamped to [-127, 127]; amax must be positive and finite.
int pot_exponent(float amax) noexcept;

/// Round-to-nearest-even to binary16, returned as the (exactly representable)
/// binary32 value. Overflow gives +inf, matching IEEE conversion.
float round_to_binary16(double v) noexcept;

/// Smallest legal scale of a format; used for all-zero blocks.
float minimum_scale(ScaleKind kind) noexcept;

/// Scale the format assigns to a block whose max magnitude is amax.
float scale_for_amax(float amax, const QuantConfig& cfg) noexcept;

/// Shared scale of one block. Throws on non-finite input or a block longer
/// than the configured block size.
float block_scale(std::span<const float> block, const QuantConfig& cfg);

QuantizedTensor quantize(const Tensor& t, const QuantConfig& cfg,
                         BlockDirection direction = BlockDirection::AlongColumns);
Tensor dequantize(const QuantizedTensor& q);

/// dequantize(quantize(t)) without materializing codes.
Tensor fake_quantize(const Tensor& t, const QuantConfig& cfg,
                     BlockDirection direction = BlockDirection::AlongColumns);

/// Mean squared difference, accumulated in binary64.
double mse(const Tensor& reference, const Tensor& reconstructed);
/// 10 log10(sum x^2 / sum (x - y)^2); +inf when the error is exactly zero.
double qsnr(const Tensor& reference, const Tensor& reconstructed);

/// Relative distance from x to the nearest power of two (nearest in linear distance).
double pot_relative_error(double x);

/// (x, pot_relative_error(x)) on n_points log-spaced samples of [x_min, x_max].
std::vector<std::pair<double, double>> pot_rounding_error_curve(double x_min, double x_max,
                                                                std::size_t n_points);

std::string to_string(ElementKind k);
std::string to_string(ScaleKind k);

}  // namespace mxrot
