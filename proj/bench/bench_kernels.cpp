// Parallel kernels against their serial references.
//
// Thread count is the second range argument of the parallel variants.

#include <benchmark/benchmark.h>

#include <random>

#include "phdeval/distance_field.hpp"
#include "phdeval/metrics.hpp"
#include "phdeval/parallel.hpp"
#include "phdeval/skeleton.hpp"

namespace phdeval {
namespace {

BinaryMask strokes(int side, std::uint64_t seed) {
  BinaryMask m({side, side});
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, side - 1);
  for (int i = 0; i < side / 8; ++i) {
    const double x0 = u(rng), y0 = u(rng), x1 = u(rng), y1 = u(rng);
    const int steps = static_cast<int>(std::hypot(x1 - x0, y1 - y0)) + 1;
    for (int s = 0; s <= steps; ++s) {
      const int cx = static_cast<int>(x0 + (x1 - x0) * s / steps), cy = static_cast<int>(y0 + (y1 - y0) * s / steps);
      for (int dy = -2; dy <= 2; ++dy)
        for (int dx = -2; dx <= 2; ++dx)
          if (cx + dx >= 0 && cy + dy >= 0 && cx + dx < side && cy + dy < side) m.set(cx + dx, cy + dy, true);
    }
  }
  return m;
}

struct Threads {
  explicit Threads(int n) { set_thread_count(n); }
  ~Threads() { set_thread_count(0); }
};

void BM_Thin(benchmark::State& state) {
  const BinaryMask m = strokes(static_cast<int>(state.range(0)), 1);
  Threads t(static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(thin(m));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m.bits().size()));
}

void BM_ThinReference(benchmark::State& state) {
  const BinaryMask m = strokes(static_cast<int>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(reference::thin(m));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m.bits().size()));
}

void BM_Edt(benchmark::State& state) {
  const BinaryMask m = skeleton_to_mask(thin(strokes(static_cast<int>(state.range(0)), 2)));
  Threads t(static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(exact_edt(m));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m.bits().size()));
}

void BM_EdtBruteForce(benchmark::State& state) {
  const BinaryMask m = skeleton_to_mask(thin(strokes(static_cast<int>(state.range(0)), 2)));
  for (auto _ : state) benchmark::DoNotOptimize(brute_force_edt(m));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m.bits().size()));
}

void BM_Phd(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const Skeleton x = thin(strokes(side, 3)), y = thin(strokes(side, 4));
  Threads t(static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(phd(x, y, ToleranceDistance(3)));
  state.counters["points"] = static_cast<double>(x.size() + y.size());
}

void BM_PhdReference(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const Skeleton x = thin(strokes(side, 3)), y = thin(strokes(side, 4));
  for (auto _ : state) benchmark::DoNotOptimize(reference::phd(x, y, ToleranceDistance(3)));
  state.counters["points"] = static_cast<double>(x.size() + y.size());
}

BENCHMARK(BM_Thin)->ArgsProduct({{256, 1024}, {1, 2, 4, 8}})->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ThinReference)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Edt)->ArgsProduct({{64, 1024}, {1, 2, 4, 8}})->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EdtBruteForce)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Phd)->ArgsProduct({{256, 1024}, {1, 2, 4, 8}})->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PhdReference)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace phdeval

BENCHMARK_MAIN();
