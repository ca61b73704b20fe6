#include <benchmark/benchmark.h>

#include "doalign/geometry.hpp"

namespace {

void BM_DoaRoundTrip(benchmark::State& state) {
  const Eigen::Vector3d v(3.0, -4.0, 12.0);
  for (auto _ : state) {
    auto [az, el] = doalign::unit_vector_to_doa(v);
    benchmark::DoNotOptimize(doalign::doa_to_unit_vector(az, el));
  }
}
BENCHMARK(BM_DoaRoundTrip);

}  // namespace

BENCHMARK_MAIN();
