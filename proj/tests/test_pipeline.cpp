#include <doctest.h>

#include <cmath>

#include "mxrot/errors.hpp"
#include "mxrot/kernels.hpp"
#include "mxrot/pipeline.hpp"
#include "mxrot/tensorio.hpp"

using namespace mxrot;

namespace {

struct Layer {
  Tensor x, w;
};

Layer make_layer(std::uint64_t seed, std::size_t rows = 128, std::size_t width = 128, std::size_t out = 64) {
  return {generate_synthetic({rows, width, 1.0, 0.02, 20.0, seed}),
          generate_gaussian(width, out, 1.0 / std::sqrt(double(width)), 1000 + seed)};
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("unquantized methods reproduce the reference product") {
  const auto l = make_layer(1);
  const Tensor ref = kernels::matmul(l.x, l.w);
  double ref_energy = 0;
  for (float v : ref.data()) ref_energy += double(v) * v;
  ref_energy /= double(ref.size());
  for (const auto& name : MethodSpec::preset_names()) {
    const auto r = run_layer(l.x, l.w, MethodSpec::preset(name, 3));
    CAPTURE(name);
    CHECK(r.output_mse <= 1e-10 * ref_energy);
    CHECK(r.act_format == "none");
  }
}

TEST_CASE("presets") {
  CHECK(MethodSpec::preset("rtn", 0).compensator == Compensator::RTN);
  CHECK(*MethodSpec::preset("smoothquant", 0).smoothing_alpha == 0.85);
  const auto q = MethodSpec::preset("quarot_plus", 5);
  CHECK(q.name == "quarot+");
  CHECK(q.rotation->scope == RotationScope::Global);
  CHECK(q.compensator == Compensator::GPTQ);
  const auto b = MethodSpec::preset("brq_spin", 5);
  CHECK(b.rotation->dim == 32);
  CHECK(b.refine.has_value());
  CHECK(b.rotation->seed == 5);
  CHECK_THROWS_WITH_AS(MethodSpec::preset("awq", 0), doctest::Contains("brq_spin"), InvalidArgument);
}

TEST_CASE("matrix shape, order and determinism") {
  const auto l = make_layer(2);
  CHECK(run_matrix(l.x, l.w, {}, {QuantConfig::mxfp4()}).empty());
  const std::vector<MethodSpec> ms = {MethodSpec::preset("rtn", 1), MethodSpec::preset("quarot", 1),
                                      MethodSpec::preset("brq", 1)};
  const std::vector<QuantConfig> fs = {QuantConfig::mxfp4(), QuantConfig::bint4()};
  const auto a = run_matrix(l.x, l.w, ms, fs);
  REQUIRE(a.size() == 6);
  CHECK(a[0].method == "rtn");
  CHECK(a[1].weight_format == "bint4");
  CHECK(a[2].method == "quarot");
  const auto b = run_matrix(l.x, l.w, {ms[2], ms[0], ms[1]}, fs);
  CHECK(b[0].output_mse == a[4].output_mse);
  CHECK(b[3].output_mse == a[1].output_mse);
  CHECK(run_matrix(l.x, l.w, ms, fs)[5].output_mse == a[5].output_mse);
  CHECK(a[0].rotation_flops == 0);
  CHECK(a[2].rotation_flops == 2ULL * 128 * 128 * 128);
  CHECK(a[4].rotation_flops == 2ULL * 128 * 32 * 128);
  CHECK(a[0].matmul_flops == 2ULL * 128 * 128 * 64);
}

TEST_CASE("shape errors") {
  const auto l = make_layer(3);
  CHECK_THROWS_AS(run_layer(l.x, Tensor::zeros(64, 64), MethodSpec::preset("rtn", 0)), InvalidArgument);
  auto m = MethodSpec::preset("brq", 0);
  m.rotation->dim = 48;
  CHECK_THROWS_AS(run_layer(l.x, l.w, m), InvalidArgument);
  m.rotation->dim = 256;
  CHECK_THROWS_AS(run_layer(l.x, l.w, m), InvalidArgument);
}

TEST_CASE("rotation with gptq beats rtn under bint4") {
  int wins = 0;
  for (std::uint64_t s = 1; s <= 5; ++s) {
    const auto l = make_layer(s, 256);
    const auto f = QuantConfig::bint4();
    const double rtn = run_layer(l.x, l.w, MethodSpec::preset("rtn", s).with_formats(f, f)).output_mse;
    const double brq = run_layer(l.x, l.w, MethodSpec::preset("brq", s).with_formats(f, f)).output_mse;
    wins += brq < rtn;
  }
  CHECK(wins == 5);
}

TEST_CASE("weight-only and activation-only quantization") {
  const auto l = make_layer(4);
  const auto wo = run_layer(l.x, l.w, MethodSpec::preset("rtn", 0).with_formats(std::nullopt, QuantConfig::mxfp4()));
  const auto ao = run_layer(l.x, l.w, MethodSpec::preset("rtn", 0).with_formats(QuantConfig::mxfp4(), std::nullopt));
  const auto both = run_layer(l.x, l.w, MethodSpec::preset("rtn", 0).with_formats(QuantConfig::mxfp4(), QuantConfig::mxfp4()));
  CHECK(wo.output_mse > 0);
  CHECK(ao.output_mse > 0);
  CHECK(wo.act_format == "none");
  CHECK(both.output_mse > std::min(wo.output_mse, ao.output_mse));
}

TEST_CASE("refinement with zero steps is plain block rotation; refined runs are deterministic") {
  const auto l = make_layer(5, 128, 64, 32);
  auto spin = MethodSpec::preset("brq_spin", 5).with_formats(QuantConfig::mxfp4(), QuantConfig::mxfp4());
  const auto plain = MethodSpec::preset("brq", 5).with_formats(QuantConfig::mxfp4(), QuantConfig::mxfp4());
  spin.refine->steps = 0;
  CHECK(run_layer(l.x, l.w, spin).output_mse == run_layer(l.x, l.w, plain).output_mse);
  spin.refine->steps = 10;
  const double a = run_layer(l.x, l.w, spin).output_mse;
  CHECK(std::isfinite(a));
  CHECK(run_layer(l.x, l.w, spin).output_mse == a);
}

TEST_CASE("whole-line pot blocks are no better than 32-wide blocks") {
  for (auto kind : {ElementKind::FP4_E2M1, ElementKind::INT4}) {
    int ok = 0;
    for (std::uint64_t s = 1; s <= 10; ++s) {
      const auto l = make_layer(s, 256, 256, 64);
      const QuantConfig fine{kind, ScaleKind::POT_E8M0, 32}, coarse{kind, ScaleKind::POT_E8M0, 256};
      const auto rtn = MethodSpec::preset("rtn", s);
      ok += run_layer(l.x, l.w, rtn.with_formats(coarse, coarse)).output_mse >=
            run_layer(l.x, l.w, rtn.with_formats(fine, fine)).output_mse;
    }
    CHECK(ok >= 9);
  }
}

}  // TEST_SUITE
