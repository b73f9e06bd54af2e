#include "mxrot/tensorio.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>

#include "mxrot/errors.hpp"
#include "mxrot/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "tensor file codec assumes a little-endian host");

namespace mxrot {

namespace {

// Stream ids inside one seed.
constexpr std::uint64_t kStreamValues = 0;
constexpr std::uint64_t kStreamChannels = 1;

template <typename T>
void put(std::vector<unsigned char>& out, T v) {
  const auto* p = reinterpret_cast<const unsigned char*>(&v);
  out.insert(out.end(), p, p + sizeof(T));
}

template <typename T>
T get(std::span<const unsigned char> bytes, std::size_t offset) {
  T v;
  std::memcpy(&v, bytes.data() + offset, sizeof(T));
  return v;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (rows == 0 || cols == 0) throw InvalidArgument("synthetic spec: rows and cols must be positive");
  if (!(base_std > 0.0) || !std::isfinite(base_std))
    throw InvalidArgument("synthetic spec: base_std must be positive");
  if (!(outlier_channel_fraction >= 0.0 && outlier_channel_fraction <= 1.0))
    throw InvalidArgument("synthetic spec: outlier_channel_fraction must lie in [0, 1]");
  if (!(outlier_gain >= 1.0) || !std::isfinite(outlier_gain))
    throw InvalidArgument("synthetic spec: outlier_gain must be >= 1");
}

std::size_t SyntheticSpec::outlier_channel_count() const {
  return static_cast<std::size_t>(std::floor(outlier_channel_fraction * static_cast<double>(cols)));
}

std::vector<std::size_t> outlier_channels(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t k = spec.outlier_channel_count();
  // Partial Fisher-Yates over [0, cols).
  std::vector<std::size_t> perm(spec.cols);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  CounterRng rng(spec.seed, kStreamChannels);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.next_below(spec.cols - i);
    std::swap(perm[i], perm[j]);
  }
  perm.resize(k);
  std::sort(perm.begin(), perm.end());
  return perm;
}

Tensor generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::vector<float> gain(spec.cols, 1.0f);
  for (std::size_t c : outlier_channels(spec)) gain[c] = static_cast<float>(spec.outlier_gain);

  const CounterRng rng(spec.seed, kStreamValues);
  const std::size_t n = spec.rows * spec.cols;
  std::vector<float> data(n);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) {
    const double v = spec.base_std * rng.gaussian_at(i);
    data[i] = static_cast<float>(v) * gain[i % spec.cols];
  }
  return Tensor(spec.rows, spec.cols, std::move(data));
}

Tensor generate_gaussian(std::size_t rows, std::size_t cols, double std, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.rows = rows;
  spec.cols = cols;
  spec.base_std = std;
  spec.seed = seed;
  return generate_synthetic(spec);
}

std::vector<unsigned char> encode_tensor(const Tensor& t) {
  if (t.empty()) throw InvalidArgument("cannot encode an empty tensor");
  std::vector<unsigned char> out;
  out.reserve(kTensorHeaderBytes + t.size() * sizeof(float));
  out.insert(out.end(), std::begin(kTensorMagic), std::end(kTensorMagic));
  put<std::uint32_t>(out, kTensorVersion);
  put<std::uint64_t>(out, t.rows());
  put<std::uint64_t>(out, t.cols());
  const auto* p = reinterpret_cast<const unsigned char*>(t.data().data());
  out.insert(out.end(), p, p + t.size() * sizeof(float));
  return out;
}

Tensor decode_tensor(std::span<const unsigned char> bytes) {
  if (bytes.size() < 4) throw FormatError("truncated header: missing magic", bytes.size());
  if (std::memcmp(bytes.data(), kTensorMagic, 4) != 0) throw FormatError("bad magic, expected \"MXTB\"", 0);
  if (bytes.size() < kTensorHeaderBytes) throw FormatError("truncated header", bytes.size());
  const auto version = get<std::uint32_t>(bytes, 4);
  if (version != kTensorVersion)
    throw FormatError("unsupported version " + std::to_string(version), 4);
  const auto rows = get<std::uint64_t>(bytes, 8);
  const auto cols = get<std::uint64_t>(bytes, 16);
  if (rows == 0) throw FormatError("rows must be positive", 8);
  if (cols == 0) throw FormatError("cols must be positive", 16);
  const std::uint64_t payload = bytes.size() - kTensorHeaderBytes;
  if (rows > std::numeric_limits<std::uint64_t>::max() / sizeof(float) / cols)
    throw FormatError("shape overflows", 8);
  const std::uint64_t expected = rows * cols * sizeof(float);
  if (payload < expected) throw FormatError("truncated payload", bytes.size());
  if (payload > expected) throw FormatError("trailing bytes after payload", kTensorHeaderBytes + expected);
  std::vector<float> data(rows * cols);
  std::memcpy(data.data(), bytes.data() + kTensorHeaderBytes, payload);
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!std::isfinite(data[i]))
      throw FormatError("non-finite value", kTensorHeaderBytes + i * sizeof(float));
  }
  return Tensor(rows, cols, std::move(data));
}

Tensor read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open tensor file " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_tensor(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.detail(), e.offset());
  }
}

void write_tensor(const std::filesystem::path& path, const Tensor& t) {
  const auto bytes = encode_tensor(t);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw InvalidArgument("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace mxrot
