#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "mxrot/errors.hpp"
#include "mxrot/rotopt.hpp"
#include "mxrot/tensorio.hpp"
#include "oracles.hpp"

using namespace mxrot;

namespace {

std::vector<std::vector<double>> blocks_as_double(const RotationMatrix& r) {
  std::vector<std::vector<double>> out;
  for (const auto& b : r.blocks()) out.emplace_back(b.data().begin(), b.data().end());
  return out;
}

}  // namespace

TEST_SUITE("rotopt") {

TEST_CASE("grid input with identity rotation has zero loss and zero gradient") {
  const Tensor x(2, 32, std::vector<float>(64, 1.5f));
  const auto id = RotationMatrix::identity(32, 32);
  CHECK(quant_loss(x, id, QuantConfig::mxfp4()) == 0.0);
  const auto g = ste_gradient(x, id, QuantConfig::mxfp4());
  for (double v : g.blocks[0]) CHECK(v == 0.0);
  const auto st = cayley_step(make_cayley_state(x, id, QuantConfig::mxfp4(), 1.0), x, QuantConfig::mxfp4());
  CHECK(st.rotation.block(0) == id.block(0));
}

TEST_CASE("global rotation of a two-channel outlier toy raises the loss") {
  std::vector<float> v;
  for (int r = 0; r < 16; ++r) v.insert(v.end(), {6.0f, 0.5f});
  const Tensor x(16, 2, v);
  const auto id = RotationMatrix::identity(2, 2);
  const auto h = build_rotation({RotationScope::Global, 2, 0, false}, 2);
  CHECK(quant_loss(x, id, QuantConfig::mxfp4()) == 0.0);
  CHECK(quant_loss(x, h, QuantConfig::mxfp4()) > 0.0);
}

TEST_CASE("loss is nonnegative") {
  std::mt19937_64 gen(1);
  for (int t = 0; t < 10; ++t) {
    const Tensor x = oracle::random_tensor(16, 64, gen, 5.0);
    CHECK(quant_loss(x, build_rotation({RotationScope::BlockDiagonal, 16, std::uint64_t(t), true}, 64),
                     QuantConfig::mxint4()) >= 0.0);
  }
}

TEST_CASE("ste gradient agrees with central differences of the surrogate") {
  std::mt19937_64 gen(2);
  const QuantConfig cfg = QuantConfig::mxfp4();
  int checked = 0;
  for (std::uint64_t probe = 0; probe < 6; ++probe) {
    const Tensor x = generate_synthetic({256, 16, 1.0, 0.125, 8.0, 40 + probe});
    const auto r = build_rotation({RotationScope::BlockDiagonal, 8, probe, true}, 16);
    const auto grad = ste_gradient(x, r, cfg);
    const auto base = blocks_as_double(r);
    CHECK(ste_surrogate_loss(x, base, r, cfg) >= 0.0);
    const double h = 1e-5;
    for (std::size_t b = 0; b < r.block_count(); ++b) {
      double num = 0, den = 0;
      for (std::size_t k = 0; k < 64; ++k) {
        auto plus = base, minus = base;
        plus[b][k] += h;
        minus[b][k] -= h;
        const double fd = (ste_surrogate_loss(x, plus, r, cfg) - ste_surrogate_loss(x, minus, r, cfg)) / (2 * h);
        num += (fd - grad.blocks[b][k]) * (fd - grad.blocks[b][k]);
        den += grad.blocks[b][k] * grad.blocks[b][k];
      }
      if (den == 0.0) continue;
      ++checked;
      CHECK(std::sqrt(num / den) <= 5e-2);
    }
  }
  CHECK(checked >= 4);
}

TEST_CASE("orthogonality survives many steps") {
  const Tensor x = generate_synthetic({64, 64, 1.0, 0.05, 20.0, 9});
  auto st = make_cayley_state(x, build_rotation({RotationScope::BlockDiagonal, 32, 9, true}, 64), QuantConfig::mxfp4(),
                              10.0);
  for (int i = 0; i < 500; ++i) st = cayley_step(std::move(st), x, QuantConfig::mxfp4());
  CHECK(st.rotation.orthogonality_error() <= 1e-4);
  CHECK(st.iteration == 500);
  CHECK(st.loss_history.size() == 500);
}

TEST_CASE("optimization history and non-worsening") {
  const Tensor x = generate_synthetic({256, 256, 1.0, 0.02, 20.0, 4});
  const auto init = build_rotation({RotationScope::BlockDiagonal, 32, 4, true}, 256);
  const auto st = optimize_rotation(x, init, QuantConfig::mxfp4(), 200, 10.0);
  REQUIRE(st.loss_history.size() == 201);
  CHECK(st.loss_history.front() == quant_loss(x, init, QuantConfig::mxfp4()));
  CHECK(st.loss_history.back() == quant_loss(x, st.rotation, QuantConfig::mxfp4()));
  CHECK(*std::min_element(st.loss_history.begin(), st.loss_history.end()) <= st.loss_history.front());
  CHECK(st.loss_history.back() <= st.loss_history.front());
}

TEST_CASE("optimization is deterministic") {
  const Tensor x = generate_synthetic({64, 64, 1.0, 0.05, 20.0, 5});
  const auto init = build_rotation({RotationScope::BlockDiagonal, 32, 5, true}, 64);
  const auto a = optimize_rotation(x, init, QuantConfig::mxfp4(), 20, 10.0);
  const auto b = optimize_rotation(x, init, QuantConfig::mxfp4(), 20, 10.0);
  CHECK(a.loss_history == b.loss_history);
  CHECK(a.rotation.block(1) == b.rotation.block(1));
}

TEST_CASE("errors") {
  const Tensor x = generate_synthetic({64, 64, 1.0, 0.05, 20.0, 5});
  const auto r = build_rotation({RotationScope::BlockDiagonal, 32, 5, true}, 64);
  CHECK_THROWS_AS(make_cayley_state(x, r, QuantConfig::mxfp4(), 0.0), InvalidArgument);
  CHECK_THROWS_AS(quant_loss(Tensor::zeros(2, 32), r, QuantConfig::mxfp4()), InvalidArgument);
  // One saturated element gives a rank-2 skew generator, so a huge step makes
  // I + (eta/2) A numerically singular.
  std::vector<float> v(32, 0.5f);
  v[0] = 7.5f;
  const Tensor one(1, 32, v);
  const auto id = RotationMatrix::identity(32, 32);
  CHECK(cayley_step(make_cayley_state(one, id, QuantConfig::mxfp4(), 1.0), one, QuantConfig::mxfp4()).iteration == 1);
  auto st = make_cayley_state(one, id, QuantConfig::mxfp4(), 1e30);
  CHECK_THROWS_AS(cayley_step(st, one, QuantConfig::mxfp4()), NumericalError);
}

}  // TEST_SUITE
