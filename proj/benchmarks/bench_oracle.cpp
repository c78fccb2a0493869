#include <benchmark/benchmark.h>

#include "afdc/aero.hpp"
#include "bench_support.hpp"

namespace {

void BM_oracle_label(benchmark::State& state) {
    const auto g = afdc::bench::naca4(0.02, 0.4, 0.12);
    afdc::OracleConfig oc;
    oc.panels = static_cast<std::size_t>(state.range(0));
    oc.clearance = 0.3;
    for (auto _ : state) {
        auto lbl = afdc::label(g, 5.0, oc);
        benchmark::DoNotOptimize(lbl.ratio);
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_oracle_label)->Arg(100)->Arg(200)->Arg(400);

void BM_oracle_free_air(benchmark::State& state) {
    const auto g = afdc::bench::naca4(0.02, 0.4, 0.12);
    afdc::OracleConfig oc;
    oc.panels = 200;
    for (auto _ : state) {
        auto lbl = afdc::label(g, 5.0, oc);
        benchmark::DoNotOptimize(lbl.cl);
    }
}
BENCHMARK(BM_oracle_free_air);

} // namespace
