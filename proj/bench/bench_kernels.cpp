// Serial reference loops vs the OpenMP kernels. Threads follow MXROT_THREADS /
// OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include "mxrot/formats.hpp"
#include "mxrot/kernels.hpp"
#include "mxrot/parallel.hpp"
#include "mxrot/serial.hpp"
#include "mxrot/tensorio.hpp"
#include "mxrot/transforms.hpp"

using namespace mxrot;

namespace {

void set_items(benchmark::State& st, std::size_t n) {
  st.SetItemsProcessed(static_cast<std::int64_t>(st.iterations() * n));
}

void BM_MatmulSerial(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  const Tensor a = generate_gaussian(n, n, 1.0, 1), b = generate_gaussian(n, n, 1.0, 2);
  for (auto _ : st) benchmark::DoNotOptimize(serial::matmul(a, b));
  set_items(st, 2 * n * n * n);
}

void BM_MatmulParallel(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  const Tensor a = generate_gaussian(n, n, 1.0, 1), b = generate_gaussian(n, n, 1.0, 2);
  for (auto _ : st) benchmark::DoNotOptimize(kernels::matmul(a, b));
  set_items(st, 2 * n * n * n);
}

void BM_QuantizeSerial(benchmark::State& st) {
  const Tensor x = generate_synthetic({2048, 1024, 1.0, 0.01, 20.0, 1});
  for (auto _ : st) benchmark::DoNotOptimize(serial::quantize(x, QuantConfig::mxfp4()));
  set_items(st, x.size());
}

void BM_QuantizeParallel(benchmark::State& st) {
  const Tensor x = generate_synthetic({2048, 1024, 1.0, 0.01, 20.0, 1});
  for (auto _ : st) benchmark::DoNotOptimize(quantize(x, QuantConfig::mxfp4()));
  set_items(st, x.size());
}

void BM_BlockRotationSerial(benchmark::State& st) {
  const auto g = static_cast<std::size_t>(st.range(0));
  const Tensor x = generate_synthetic({2048, 1024, 1.0, 0.01, 20.0, 1});
  const auto r = build_rotation({RotationScope::BlockDiagonal, g, 1, true}, 1024);
  for (auto _ : st) benchmark::DoNotOptimize(serial::block_diag_right(x, r.blocks()));
  set_items(st, x.size());
}

void BM_BlockRotationParallel(benchmark::State& st) {
  const auto g = static_cast<std::size_t>(st.range(0));
  const Tensor x = generate_synthetic({2048, 1024, 1.0, 0.01, 20.0, 1});
  const auto r = build_rotation({RotationScope::BlockDiagonal, g, 1, true}, 1024);
  for (auto _ : st) benchmark::DoNotOptimize(kernels::block_diag_right(x, r.blocks()));
  set_items(st, x.size());
}

}  // namespace

BENCHMARK(BM_MatmulSerial)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MatmulParallel)->Arg(128)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_QuantizeSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_QuantizeParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BlockRotationSerial)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BlockRotationParallel)->Arg(32)->Arg(128)->Arg(1024)->Unit(benchmark::kMillisecond);

int main(int argc, char** argv) {
  configure_threads_from_env();
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
