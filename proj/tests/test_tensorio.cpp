#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <unistd.h>

#include "mxrot/errors.hpp"
#include "mxrot/rng.hpp"
#include "mxrot/tensorio.hpp"
#include "oracles.hpp"

using namespace mxrot;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  auto p = fs::temp_directory_path() / ("mxrot_io_" + std::to_string(::getpid()));
  fs::create_directories(p);
  return p;
}

double column_std(const Tensor& t, std::size_t c) {
  double s = 0, s2 = 0;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    s += t(r, c);
    s2 += double(t(r, c)) * t(r, c);
  }
  const double n = double(t.rows());
  return std::sqrt(s2 / n - (s / n) * (s / n));
}

}  // namespace

TEST_SUITE("tensorio") {

TEST_CASE("tensor rejects bad shapes and non-finite values") {
  CHECK_THROWS_AS(Tensor(0, 3, {}), InvalidArgument);
  CHECK_THROWS_AS(Tensor(2, 2, {1, 2, 3}), InvalidArgument);
  CHECK_THROWS_AS(Tensor(1, 2, {1, std::numeric_limits<float>::quiet_NaN()}), InvalidArgument);
  CHECK_THROWS_AS(Tensor(1, 1, {std::numeric_limits<float>::infinity()}), InvalidArgument);
  const Tensor t(2, 3, {1, 2, 3, 4, 5, 6});
  CHECK(t(1, 2) == 6.0f);
  const Tensor tt = t.transposed();
  CHECK(tt.rows() == 3);
  CHECK(tt(2, 1) == 6.0f);
  CHECK(tt.transposed() == t);
}

TEST_CASE("counter rng is a pure function of seed, stream and counter") {
  CounterRng a(5, 1), b(5, 1), c(5, 2);
  CHECK(a.at(17) == b.at(17));
  CHECK(a.at(17) != c.at(17));
  std::uint64_t first = a.next();
  CHECK(first == b.at(0));
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform_at(i);
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
  // Gaussian draws have roughly unit variance.
  double s2 = 0;
  for (int i = 0; i < 20000; ++i) s2 += a.gaussian_at(i) * a.gaussian_at(i);
  CHECK(s2 / 20000 == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("synthetic with zero outlier fraction scales no column") {
  const SyntheticSpec spec{4, 8, 1.0, 0.0, 1.0, 7};
  CHECK(spec.outlier_channel_count() == 0);
  CHECK(outlier_channels(spec).empty());
  const Tensor t = generate_synthetic(spec);
  CHECK(t.rows() == 4);
  CHECK(t.cols() == 8);
  // Same base stream as any gain: with gain 1 the outlier selection is irrelevant.
  const Tensor u = generate_synthetic({4, 8, 1.0, 0.5, 1.0, 7});
  CHECK(bitwise_equal(t, u));
}

TEST_CASE("synthetic outlier columns have std scaled by the gain") {
  const SyntheticSpec spec{20000, 8, 1.0, 0.25, 10.0, 3};
  const auto chans = outlier_channels(spec);
  REQUIRE(chans.size() == 2);
  const Tensor t = generate_synthetic(spec);
  double regular = 0;
  for (std::size_t c = 0; c < 8; ++c)
    if (std::find(chans.begin(), chans.end(), c) == chans.end()) regular += column_std(t, c) / 6;
  for (auto c : chans) CHECK(column_std(t, c) / regular == doctest::Approx(10.0).epsilon(0.2));
  CHECK(regular == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("synthetic generation is deterministic") {
  const SyntheticSpec spec{64, 32, 1.0, 0.1, 20.0, 11};
  CHECK(bitwise_equal(generate_synthetic(spec), generate_synthetic(spec)));
  auto other = spec;
  other.seed = 12;
  CHECK_FALSE(bitwise_equal(generate_synthetic(spec), generate_synthetic(other)));
}

TEST_CASE("synthetic spec validation") {
  CHECK_THROWS_AS(generate_synthetic({0, 4, 1, 0, 1, 0}), InvalidArgument);
  CHECK_THROWS_AS(generate_synthetic({4, 0, 1, 0, 1, 0}), InvalidArgument);
  CHECK_THROWS_AS(generate_synthetic({4, 4, 0, 0, 1, 0}), InvalidArgument);
  CHECK_THROWS_AS(generate_synthetic({4, 4, 1, 1.5, 1, 0}), InvalidArgument);
  CHECK_THROWS_AS(generate_synthetic({4, 4, 1, 0.5, 0.5, 0}), InvalidArgument);
}

TEST_CASE("file roundtrip of a 2x3 tensor") {
  const auto dir = temp_dir();
  const Tensor t(2, 3, {1, 2, 3, 4, 5, 6});
  write_tensor(dir / "a.mxtb", t);
  CHECK(bitwise_equal(read_tensor(dir / "a.mxtb"), t));
  CHECK(fs::file_size(dir / "a.mxtb") == kTensorHeaderBytes + 6 * 4);
  CHECK_FALSE(fs::exists(dir / "a.mxtb.tmp"));
  fs::remove_all(dir);
}

TEST_CASE("file roundtrip is bit-exact for random payloads") {
  std::mt19937_64 gen(99);
  std::uniform_int_distribution<std::uint32_t> bits;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t r = 1 + gen() % 9, c = 1 + gen() % 17;
    std::vector<float> v(r * c);
    for (auto& x : v) {
      do {
        const std::uint32_t b = bits(gen);
        std::memcpy(&x, &b, 4);
      } while (!std::isfinite(x));
    }
    const Tensor t(r, c, v);
    CHECK(bitwise_equal(decode_tensor(encode_tensor(t)), t));
  }
}

TEST_CASE("header layout is little-endian magic, version, rows, cols") {
  const auto bytes = encode_tensor(Tensor(2, 1, {1.0f, -2.0f}));
  REQUIRE(bytes.size() == 32);
  CHECK(std::memcmp(bytes.data(), "MXTB", 4) == 0);
  CHECK(bytes[4] == 1);
  CHECK(bytes[8] == 2);
  CHECK(bytes[16] == 1);
  float v;
  std::memcpy(&v, bytes.data() + 28, 4);
  CHECK(v == -2.0f);
}

TEST_CASE("decode errors name the offset") {
  auto good = encode_tensor(Tensor(2, 2, {1, 2, 3, 4}));

  auto bad_magic = good;
  std::memcpy(bad_magic.data(), "XXXX", 4);
  CHECK_THROWS_AS(decode_tensor(bad_magic), FormatError);

  CHECK_THROWS_AS(decode_tensor({}), FormatError);
  try {
    decode_tensor(std::span<const unsigned char>(good.data(), 10));
    FAIL("expected truncation error");
  } catch (const FormatError& e) {
    CHECK(e.offset() == 10);
  }

  auto truncated = good;
  truncated.pop_back();
  CHECK_THROWS_WITH_AS(decode_tensor(truncated), doctest::Contains("truncated payload"), FormatError);

  auto trailing = good;
  trailing.push_back(0);
  CHECK_THROWS_WITH_AS(decode_tensor(trailing), doctest::Contains("trailing"), FormatError);

  auto version = good;
  version[4] = 2;
  CHECK_THROWS_WITH_AS(decode_tensor(version), doctest::Contains("version"), FormatError);

  auto nan = good;
  const float q = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(nan.data() + kTensorHeaderBytes + 8, &q, 4);
  try {
    decode_tensor(nan);
    FAIL("expected non-finite error");
  } catch (const FormatError& e) {
    CHECK(e.offset() == kTensorHeaderBytes + 8);
  }
}

TEST_CASE("reading an empty or missing file fails") {
  const auto dir = temp_dir();
  { std::ofstream(dir / "empty.mxtb"); }
  CHECK_THROWS_WITH_AS(read_tensor(dir / "empty.mxtb"), doctest::Contains("empty.mxtb"), FormatError);
  CHECK_THROWS_AS(read_tensor(dir / "missing.mxtb"), Error);
  fs::remove_all(dir);
}

}  // TEST_SUITE
