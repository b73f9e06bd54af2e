#include "mxrot/formats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mxrot/errors.hpp"

namespace mxrot {

namespace {

constexpr std::array<float, 8> kE2m1Magnitudes = {0.0f, 0.5f, 1.0f, 1.5f, 2.0f, 3.0f, 4.0f, 6.0f};

// Index of the nearest grid magnitude for t = |x| / scale >= 0. Each term
// counts one midpoint; strict vs non-strict comparison sends exact ties to
// the even index.
inline unsigned magnitude_index(ElementKind kind, double t) noexcept {
  if (kind == ElementKind::FP4_E2M1) {
    return unsigned(t > 0.25) + unsigned(t >= 0.75) + unsigned(t > 1.25) + unsigned(t >= 1.75) +
           unsigned(t > 2.5) + unsigned(t >= 3.5) + unsigned(t > 5.0);
  }
  return unsigned(t > 0.5) + unsigned(t >= 1.5) + unsigned(t > 2.5) + unsigned(t >= 3.5) +
         unsigned(t > 4.5) + unsigned(t >= 5.5) + unsigned(t > 6.5);
}

inline std::uint8_t make_code(ElementKind kind, unsigned m, bool negative) noexcept {
  if (m == 0) return 0;
  if (kind == ElementKind::FP4_E2M1) return static_cast<std::uint8_t>(m | (negative ? 0x8u : 0u));
  const int v = negative ? -static_cast<int>(m) : static_cast<int>(m);
  return static_cast<std::uint8_t>(v & 0xF);
}

float scale_from_amax(float amax, const QuantConfig& cfg) noexcept {
  if (amax == 0.0f) return minimum_scale(cfg.scale);
  switch (cfg.scale) {
    case ScaleKind::POT_E8M0:
      return std::ldexp(1.0f, pot_exponent(amax));
    case ScaleKind::FP16: {
      float s = round_to_binary16(static_cast<double>(amax) / cfg.element_format().max_code_value());
      if (s == 0.0f) s = minimum_scale(ScaleKind::FP16);
      if (std::isinf(s)) s = 65504.0f;
      return s;
    }
    case ScaleKind::FP32: {
      const float s = static_cast<float>(static_cast<double>(amax) / cfg.element_format().max_code_value());
      return s > 0.0f ? s : minimum_scale(ScaleKind::FP32);
    }
  }
  return 1.0f;
}

// Grid magnitude for t >= 0, built from the same midpoint tests as
// magnitude_index so both agree on every input.
template <ElementKind kKind>
inline float magnitude_from_midpoints(double t) noexcept {
  if constexpr (kKind == ElementKind::FP4_E2M1) {
    return 0.5f * float(t > 0.25) + 0.5f * float(t >= 0.75) + 0.5f * float(t > 1.25) + 0.5f * float(t >= 1.75) +
           float(t > 2.5) + float(t >= 3.5) + 2.0f * float(t > 5.0);
  } else {
    return float(t > 0.5) + float(t >= 1.5) + float(t > 2.5) + float(t >= 3.5) + float(t > 4.5) + float(t >= 5.5) +
           float(t > 6.5);
  }
}

template <ElementKind kKind, bool kExactInverse, bool kCodes, bool kValues>
inline void quantize_run_t(const float* __restrict src, std::size_t stride, std::size_t n, float scale,
                           std::uint8_t* __restrict codes, float* __restrict values) noexcept {
  const double sd = static_cast<double>(scale);
  const double inv = 1.0 / sd;
  for (std::size_t i = 0; i < n; ++i) {
    const float x = src[i * stride];
    const double a = std::fabs(static_cast<double>(x));
    const double t = kExactInverse ? a * inv : a / sd;
    if constexpr (kCodes) codes[i * stride] = make_code(kKind, magnitude_index(kKind, t), x < 0.0f);
    if constexpr (kValues) {
      const float v = magnitude_from_midpoints<kKind>(t) * scale;
      values[i * stride] = (x < 0.0f && v != 0.0f) ? -v : v;
    }
  }
}

// Quantizes one strided line segment with a known scale.
template <bool kCodes, bool kValues>
inline void quantize_run(const float* src, std::size_t stride, std::size_t n, ElementKind kind, float scale,
                         std::uint8_t* codes, float* values) noexcept {
  // For a power-of-two scale 1/scale is exact; for binary16 scales |x| * inv
  // can differ from |x| / scale in the last bit, so divide instead.
  const bool exact_inv = std::ldexp(1.0, std::ilogb(scale)) == static_cast<double>(scale);
  if (kind == ElementKind::FP4_E2M1) {
    if (exact_inv)
      quantize_run_t<ElementKind::FP4_E2M1, true, kCodes, kValues>(src, stride, n, scale, codes, values);
    else
      quantize_run_t<ElementKind::FP4_E2M1, false, kCodes, kValues>(src, stride, n, scale, codes, values);
  } else {
    if (exact_inv)
      quantize_run_t<ElementKind::INT4, true, kCodes, kValues>(src, stride, n, scale, codes, values);
    else
      quantize_run_t<ElementKind::INT4, false, kCodes, kValues>(src, stride, n, scale, codes, values);
  }
}

template <bool kCodes, bool kValues>
void quantize_impl(const Tensor& t, const QuantConfig& cfg, BlockDirection dir, std::uint8_t* codes,
                   float* scales, float* values) {
  const std::size_t rows = t.rows();
  const std::size_t cols = t.cols();
  const float* src = t.data().data();
  const ElementKind kind = cfg.element;

  if (dir == BlockDirection::AlongColumns) {
    const std::size_t bs = cfg.effective_block(cols);
    const std::size_t nb = (cols + bs - 1) / bs;
#pragma omp parallel for schedule(static)
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t b = 0; b < nb; ++b) {
        const std::size_t c0 = b * bs;
        const std::size_t len = std::min(bs, cols - c0);
        const float* p = src + r * cols + c0;
        float amax = 0.0f;
        for (std::size_t i = 0; i < len; ++i) amax = std::max(amax, std::fabs(p[i]));
        const float s = scale_from_amax(amax, cfg);
        if (scales) scales[r * nb + b] = s;
        quantize_run<kCodes, kValues>(p, 1, len, kind, s, kCodes ? codes + r * cols + c0 : nullptr,
                                      kValues ? values + r * cols + c0 : nullptr);
      }
    }
    return;
  }

  const std::size_t bs = cfg.effective_block(rows);
  const std::size_t nb = (rows + bs - 1) / bs;
#pragma omp parallel for schedule(static)
  for (std::size_t c = 0; c < cols; ++c) {
    for (std::size_t b = 0; b < nb; ++b) {
      const std::size_t r0 = b * bs;
      const std::size_t len = std::min(bs, rows - r0);
      const float* p = src + r0 * cols + c;
      float amax = 0.0f;
      for (std::size_t i = 0; i < len; ++i) amax = std::max(amax, std::fabs(p[i * cols]));
      const float s = scale_from_amax(amax, cfg);
      if (scales) scales[b * cols + c] = s;
      quantize_run<kCodes, kValues>(p, cols, len, kind, s, kCodes ? codes + r0 * cols + c : nullptr,
                                    kValues ? values + r0 * cols + c : nullptr);
    }
  }
}

}  // namespace

float scale_for_amax(float amax, const QuantConfig& cfg) noexcept { return scale_from_amax(amax, cfg); }

const std::vector<std::string>& QuantConfig::preset_names() {
  static const std::vector<std::string> names = {"mxfp4", "mxint4", "bfp4", "bint4", "int4"};
  return names;
}

QuantConfig QuantConfig::from_name(std::string_view name) {
  if (name == "mxfp4") return mxfp4();
  if (name == "mxint4") return mxint4();
  if (name == "bfp4") return bfp4();
  if (name == "bint4") return bint4();
  if (name == "int4") return int4_per_channel();
  std::string valid;
  for (const auto& n : preset_names()) valid += (valid.empty() ? "" : "|") + n;
  throw InvalidArgument("unknown format '" + std::string(name) + "', valid presets: " + valid);
}

std::string QuantConfig::name() const {
  for (const auto& n : preset_names())
    if (from_name(n) == *this) return n;
  std::ostringstream os;
  os << to_string(element) << "/" << to_string(scale) << "/"
     << (block_size == 0 ? std::string("line") : std::to_string(block_size));
  return os.str();
}

std::size_t QuantizedTensor::blocks_per_line() const noexcept {
  const std::size_t line = direction == BlockDirection::AlongColumns ? cols : rows;
  const std::size_t bs = block_len();
  return (line + bs - 1) / bs;
}

std::size_t QuantizedTensor::scale_index(std::size_t r, std::size_t c) const noexcept {
  const std::size_t bs = block_len();
  if (direction == BlockDirection::AlongColumns) return r * blocks_per_line() + c / bs;
  return (r / bs) * cols + c;
}

std::array<float, 16> e2m1_values() {
  std::array<float, 16> out{};
  for (unsigned code = 0; code < 16; ++code) {
    const unsigned sign = code >> 3;
    const unsigned exp = (code >> 1) & 0x3;
    const unsigned man = code & 0x1;
    // Bias 1; exponent field 0 is subnormal: 0.m * 2^(1 - bias).
    const float mag = exp == 0 ? 0.5f * static_cast<float>(man)
                               : std::ldexp(1.0f + 0.5f * static_cast<float>(man), static_cast<int>(exp) - 1);
    out[code] = (sign && mag != 0.0f) ? -mag : mag;
  }
  return out;
}

float decode_code(ElementKind kind, std::uint8_t code) noexcept {
  code &= 0xF;
  if (kind == ElementKind::FP4_E2M1) {
    const float mag = kE2m1Magnitudes[code & 0x7];
    return (code & 0x8) && mag != 0.0f ? -mag : mag;
  }
  const int v = (code & 0x8) ? static_cast<int>(code) - 16 : static_cast<int>(code);
  return static_cast<float>(v);
}

std::uint8_t encode_nearest(ElementKind kind, double x, double scale) noexcept {
  const unsigned m = magnitude_index(kind, std::fabs(x) / scale);
  return make_code(kind, m, x < 0.0);
}

std::uint8_t negate_code(ElementKind kind, std::uint8_t code) noexcept {
  if (code == 0) return 0;
  if (kind == ElementKind::FP4_E2M1) return static_cast<std::uint8_t>(code ^ 0x8u);
  return static_cast<std::uint8_t>((16 - code) & 0xF);
}

int pot_exponent(float amax) noexcept {
  int e2 = 0;
  std::frexp(amax, &e2);  // amax = m * 2^e2, m in [0.5, 1)
  const int floor_log2 = e2 - 1;
  return std::clamp(floor_log2 - 2, -127, 127);
}

float round_to_binary16(double v) noexcept {
  if (v == 0.0 || !std::isfinite(v)) return static_cast<float>(v);
  const double a = std::fabs(v);
  int e2 = 0;
  std::frexp(a, &e2);
  const int e = std::max(e2 - 1, -14);  // subnormals share the 2^-24 quantum
  const double quantum = std::ldexp(1.0, e - 10);
  const double r = std::nearbyint(a / quantum) * quantum;
  const double out = r > 65504.0 ? std::numeric_limits<double>::infinity() : r;
  return static_cast<float>(v < 0 ? -out : out);
}

float minimum_scale(ScaleKind kind) noexcept {
  switch (kind) {
    case ScaleKind::POT_E8M0:
      return std::ldexp(1.0f, -127);
    case ScaleKind::FP16:
      return std::ldexp(1.0f, -24);
    case ScaleKind::FP32:
      return std::numeric_limits<float>::min();
  }
  return 1.0f;
}

float block_scale(std::span<const float> block, const QuantConfig& cfg) {
  if (cfg.block_size != 0 && block.size() > cfg.block_size)
    throw InvalidArgument("block of length " + std::to_string(block.size()) + " exceeds block size " +
                          std::to_string(cfg.block_size));
  float amax = 0.0f;
  for (float v : block) {
    if (!std::isfinite(v)) throw InvalidArgument("block_scale: non-finite input");
    amax = std::max(amax, std::fabs(v));
  }
  return scale_from_amax(amax, cfg);
}

QuantizedTensor quantize(const Tensor& t, const QuantConfig& cfg, BlockDirection direction) {
  if (t.empty()) throw InvalidArgument("quantize: empty tensor");
  QuantizedTensor q;
  q.config = cfg;
  q.direction = direction;
  q.rows = t.rows();
  q.cols = t.cols();
  q.codes.resize(t.size());
  const std::size_t lines = direction == BlockDirection::AlongColumns ? q.rows : q.cols;
  q.scales.resize(lines * q.blocks_per_line());
  quantize_impl<true, false>(t, cfg, direction, q.codes.data(), q.scales.data(), nullptr);
  return q;
}

Tensor dequantize(const QuantizedTensor& q) {
  if (q.codes.size() != q.rows * q.cols) throw InvalidArgument("dequantize: malformed quantized tensor");
  std::vector<float> out(q.codes.size());
  const ElementKind kind = q.config.element;
#pragma omp parallel for schedule(static)
  for (std::size_t r = 0; r < q.rows; ++r)
    for (std::size_t c = 0; c < q.cols; ++c)
      out[r * q.cols + c] = decode_code(kind, q.code(r, c)) * q.scales[q.scale_index(r, c)];
  return Tensor(q.rows, q.cols, std::move(out));
}

Tensor fake_quantize(const Tensor& t, const QuantConfig& cfg, BlockDirection direction) {
  if (t.empty()) throw InvalidArgument("fake_quantize: empty tensor");
  std::vector<float> out(t.size());
  quantize_impl<false, true>(t, cfg, direction, nullptr, nullptr, out.data());
  return Tensor(t.rows(), t.cols(), std::move(out));
}

namespace {
void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw InvalidArgument(std::string(what) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                          std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                          std::to_string(b.cols()));
}
}  // namespace

double mse(const Tensor& reference, const Tensor& reconstructed) {
  require_same_shape(reference, reconstructed, "mse");
  const auto x = reference.data();
  const auto y = reconstructed.data();
  double err = 0.0;
#pragma omp parallel for reduction(+ : err) schedule(static)
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = static_cast<double>(x[i]) - static_cast<double>(y[i]);
    err += d * d;
  }
  return err / static_cast<double>(x.size());
}

double qsnr(const Tensor& reference, const Tensor& reconstructed) {
  require_same_shape(reference, reconstructed, "qsnr");
  const auto x = reference.data();
  const auto y = reconstructed.data();
  double sig = 0.0;
  double err = 0.0;
#pragma omp parallel for reduction(+ : sig, err) schedule(static)
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    const double d = xi - static_cast<double>(y[i]);
    sig += xi * xi;
    err += d * d;
  }
  if (err == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(sig / err);
}

double pot_relative_error(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw InvalidArgument("pot_relative_error: x must be positive");
  int e2 = 0;
  std::frexp(x, &e2);
  const double lo = std::ldexp(1.0, e2 - 1);
  const double hi = 2.0 * lo;
  return std::min(x - lo, hi - x) / x;
}

std::vector<std::pair<double, double>> pot_rounding_error_curve(double x_min, double x_max,
                                                                std::size_t n_points) {
  if (!(x_min > 0.0) || !(x_max > x_min) || !std::isfinite(x_max))
    throw InvalidArgument("pot_rounding_error_curve: need 0 < x_min < x_max");
  if (n_points < 2) throw InvalidArgument("pot_rounding_error_curve: need at least 2 points");
  std::vector<std::pair<double, double>> out;
  out.reserve(n_points);
  const double l0 = std::log2(x_min);
  const double l1 = std::log2(x_max);
  for (std::size_t i = 0; i < n_points; ++i) {
    const double x = i + 1 == n_points ? x_max
                                       : std::exp2(l0 + (l1 - l0) * static_cast<double>(i) /
                                                            static_cast<double>(n_points - 1));
    out.emplace_back(x, pot_relative_error(x));
  }
  return out;
}

std::string to_string(ElementKind k) { return k == ElementKind::FP4_E2M1 ? "fp4_e2m1" : "int4"; }

std::string to_string(ScaleKind k) {
  switch (k) {
    case ScaleKind::POT_E8M0:
      return "e8m0";
    case ScaleKind::FP16:
      return "fp16";
    case ScaleKind::FP32:
      return "fp32";
  }
  return "?";
}

}  // namespace mxrot
