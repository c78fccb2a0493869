#include <benchmark/benchmark.h>

#include "afdc/raster.hpp"
#include "bench_support.hpp"

namespace {

void BM_rasterize(benchmark::State& state) {
    const auto g = afdc::bench::naca4(0.02, 0.4, 0.12);
    const afdc::PosedSection sec = afdc::pose(g, 8.0, 0.3);
    afdc::GridSpec grid;
    grid.width = grid.height = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        auto img = afdc::rasterize(sec, grid, true);
        benchmark::DoNotOptimize(img.pixels.data());
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_rasterize)->Arg(64)->Arg(128)->Arg(256);

void BM_closing(benchmark::State& state) {
    const auto g = afdc::bench::naca4(0.02, 0.4, 0.12);
    const afdc::PosedSection sec = afdc::pose(g, 8.0, 0.3);
    afdc::GridSpec grid;
    const auto img = afdc::rasterize(sec, grid, true);
    for (auto _ : state) {
        auto closed = afdc::close3x3(img);
        benchmark::DoNotOptimize(closed.pixels.data());
    }
}
BENCHMARK(BM_closing);

} // namespace
