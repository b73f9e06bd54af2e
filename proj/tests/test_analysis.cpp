#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mxrot/analysis.hpp"
#include "mxrot/errors.hpp"
#include "mxrot/tensorio.hpp"
#include "oracles.hpp"

using namespace mxrot;

TEST_SUITE("analysis") {

TEST_CASE("all-equal tensor has no outliers") {
  const Tensor t(4, 64, std::vector<float>(256, 0.75f));
  const auto rep = classify_blocks(t, 32);
  CHECK(rep.outlier_threshold == 0.75);
  CHECK(rep.outlier_count == 0);
  CHECK(rep.regular_count == 8);
}

TEST_CASE("a single spike is the only outlier") {
  std::mt19937_64 gen(3);
  std::vector<float> v = oracle::random_tensor(1, 1000, gen, 0.1).release();
  for (auto& x : v) x = std::clamp(x, -0.9f, 0.9f);
  v[517] = 50.0f;
  const Tensor t(1, 1000, v);
  const auto rep = classify_blocks(t, 32, 0.001);
  CHECK(rep.outlier_threshold < 50.0);
  CHECK(rep.outlier_count == 1);
  CHECK(rep.blocks[517 / 32].label == BlockLabel::Outlier);
  CHECK(rep.blocks.size() == 32);  // last block is partial
  CHECK(magnitude_threshold(t, 0.0) == 50.0);
  CHECK(classify_blocks(t, 32, 0.0).outlier_count == 0);
}

TEST_CASE("threshold rank") {
  std::vector<float> v(100);
  std::iota(v.begin(), v.end(), 1.0f);
  const Tensor t(1, 100, v);
  CHECK(magnitude_threshold(t, 0.05) == 95.0);  // 96..100 exceed it
  CHECK(magnitude_threshold(t, 0.01) == 99.0);
  CHECK(magnitude_threshold(t, 1.0) == 1.0);
  CHECK_THROWS_AS(magnitude_threshold(t, 1.5), InvalidArgument);
}

TEST_CASE("grid block has zero error; spikes hurt the pot scale more") {
  std::vector<float> v(64, 1.0f);
  for (int i = 32; i < 64; ++i) v[i] = 0.3f;
  v[40] = 13.0f;  // just under 16: pot scale 2 clips to 12, fp16 scale keeps it
  const Tensor t(1, 64, v);
  const auto rep = block_error_report(t, QuantConfig::mxfp4(), classify_blocks(t, 32), QuantConfig::bfp4());
  CHECK(rep.blocks[0].mse == 0.0);
  CHECK(rep.blocks[1].label == BlockLabel::Outlier);
  CHECK(rep.blocks[1].mse > rep.blocks[1].compare_mse);
  CHECK(rep.regular_count == 1);
  CHECK(rep.mean_regular_mse == 0.0);
  CHECK_THROWS_AS(block_error_report(t, QuantConfig::mxfp4(), classify_blocks(t, 16)), InvalidArgument);
}

TEST_CASE("block elements") {
  std::vector<float> v(32, 0.1f);
  v[0] = 1.6f;
  v[1] = 2.4f;
  v[2] = 5.0f;
  const Tensor t(1, 32, v);
  const auto e = block_elements(t, 0, 0, 32, QuantConfig::mxfp4(), QuantConfig::bfp4());
  REQUIRE(e.values.size() == 32);
  CHECK(e.values[2] == 5.0f);
  // scale 1: 1.6 -> 1.5, 2.4 -> 2, 5.0 -> 4 (tie to even code)
  CHECK(e.relative_error[0] == doctest::Approx(0.1 / 1.6));
  CHECK(e.relative_error[1] == doctest::Approx(0.4 / 2.4));
  CHECK(e.relative_error[2] == doctest::Approx(0.2));
  CHECK_THROWS_AS(block_elements(t, 1, 0, 32, QuantConfig::mxfp4(), QuantConfig::bfp4()), InvalidArgument);
}

TEST_CASE("threshold fractions") {
  std::vector<float> v(100);
  std::iota(v.begin(), v.end(), 1.0f);
  const Tensor t(1, 100, v);
  const auto c = threshold_fractions(t, {0.0, 50.0, 99.0, 100.0});
  CHECK(c.fractions == std::vector<double>{1.0, 0.5, 0.01, 0.0});
  CHECK_THROWS_AS(threshold_fractions(t, {2.0, 1.0}), InvalidArgument);
  const Tensor g = generate_synthetic({64, 128, 1.0, 0.05, 10.0, 1});
  const auto m = threshold_fractions(g, {0.1, 0.5, 1.0, 2.0, 4.0, 8.0});
  for (std::size_t i = 1; i < m.fractions.size(); ++i) CHECK(m.fractions[i] <= m.fractions[i - 1]);
}

TEST_CASE("identity rotation leaves the regular loss unchanged") {
  const Tensor t = generate_synthetic({64, 256, 1.0, 0.02, 20.0, 2});
  const auto d = regular_block_loss_delta(t, QuantConfig::mxfp4(), RotationMatrix::identity(256, 32));
  CHECK(d.before == d.after);
  CHECK(d.threshold_pre == d.threshold_post);
  CHECK(d.regular_before == d.regular_after);
}

TEST_CASE("global rotation raises regular-block loss with sparse outliers; block rotation less") {
  int global_up = 0, block_less = 0;
  for (std::uint64_t s = 1; s <= 5; ++s) {
    const Tensor t = generate_synthetic({512, 1024, 1.0, 1.0 / 1024, 50.0, s});
    const auto g = regular_block_loss_delta(t, QuantConfig::mxfp4(), RotationSpec{RotationScope::Global, 1024, s, true});
    const auto b =
        regular_block_loss_delta(t, QuantConfig::mxfp4(), RotationSpec{RotationScope::BlockDiagonal, 32, s, true});
    global_up += g.after > g.before;
    block_less += (b.after_log10 - b.before_log10) < (g.after_log10 - g.before_log10);
  }
  CHECK(global_up == 5);
  CHECK(block_less == 5);
}

TEST_CASE("block scale distribution") {
  CHECK(block_scale_distribution(Tensor(2, 64, std::vector<float>(128, -2.0f)), 32) ==
        std::vector<float>(4, 2.0f));
  std::vector<float> v(64, 0.5f);
  v[33] = -9.0f;
  const Tensor t(1, 64, v);
  CHECK(block_scale_distribution(t, 32) == std::vector<float>{0.5f, 9.0f});
  std::vector<float> neg(v);
  for (auto& x : neg) x = -x;
  CHECK(block_scale_distribution(Tensor(1, 64, neg), 32) == block_scale_distribution(t, 32));
  CHECK(count_grown_blocks({1.0f, 1.0f, 2.0f}, {1.3f, 1.25f, 1.0f}) == 1);
  CHECK_THROWS_AS(count_grown_blocks({1.0f}, {1.0f, 2.0f}), InvalidArgument);
}

TEST_CASE("sweep") {
  const Tensor t = generate_synthetic({64, 256, 1.0, 0.02, 20.0, 3});
  const auto sw = rotation_dim_sweep(t, QuantConfig::mxfp4(), {8, 32, 256}, 7);
  REQUIRE(sw.size() == 3);
  const auto global = build_rotation({RotationScope::Global, 256, 7, true}, 256);
  const Tensor rt = rotate_activations(t, global);
  CHECK(sw[2].mse == mse(rt, fake_quantize(rt, QuantConfig::mxfp4())));
  CHECK(sweep_argmin(sw) == std::min_element(sw.begin(), sw.end(), [](auto& a, auto& b) { return a.mse < b.mse; })->dim);
  CHECK_THROWS_AS(rotation_dim_sweep(t, QuantConfig::mxfp4(), {24}, 7), InvalidArgument);
}

TEST_CASE("block labels follow permutations of whole blocks") {
  const Tensor t = generate_synthetic({8, 128, 1.0, 0.05, 20.0, 4});
  std::vector<float> v(t.size());
  // swap block 0 and block 3 of every row
  for (std::size_t r = 0; r < 8; ++r)
    for (std::size_t c = 0; c < 128; ++c) {
      const std::size_t src = c < 32 ? c + 96 : (c >= 96 ? c - 96 : c);
      v[r * 128 + c] = t(r, src);
    }
  const Tensor p(8, 128, v);
  const auto a = classify_blocks(t, 32), b = classify_blocks(p, 32);
  CHECK(a.outlier_threshold == b.outlier_threshold);
  for (std::size_t r = 0; r < 8; ++r) {
    CHECK(a.blocks[r * 4].label == b.blocks[r * 4 + 3].label);
    CHECK(a.blocks[r * 4 + 1].label == b.blocks[r * 4 + 1].label);
  }
}

}  // TEST_SUITE
