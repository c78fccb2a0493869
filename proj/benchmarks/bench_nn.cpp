#include <benchmark/benchmark.h>

#include <random>

#include "afdc/model.hpp"
#include "afdc/nn.hpp"

namespace {

afdc::Tensor random_tensor(std::vector<std::size_t> shape, std::uint64_t seed) {
    afdc::Tensor t(std::move(shape));
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < t.numel(); ++i)
        t[i] = static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5;
    return t;
}

void BM_conv2d_fwd(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto x = random_tensor({n, 8, 64, 64}, 1);
    const auto w = random_tensor({16, 8, 3, 3}, 2);
    const auto b = afdc::Tensor({16});
    for (auto _ : state) {
        auto y = afdc::conv2d_fwd(x, w, b);
        benchmark::DoNotOptimize(y.data());
    }
    state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_conv2d_fwd)->Arg(1)->Arg(10)->Arg(50);

void BM_model_forward(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    afdc::ModelConfig cfg;
    afdc::Model model = afdc::build_model(cfg, 7);
    const auto x = random_tensor({n, 1, 128, 128}, 3);
    for (auto _ : state) {
        auto y = afdc::model_forward(model, x, afdc::NnMode::Infer);
        benchmark::DoNotOptimize(y.data());
    }
    state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_model_forward)->Arg(1)->Arg(50);

void BM_train_step(benchmark::State& state) {
    afdc::ModelConfig cfg;
    afdc::Model model = afdc::build_model(cfg, 7);
    const auto x = random_tensor({10, 1, 128, 128}, 3);
    const auto y = random_tensor({10, 1}, 4);
    std::vector<afdc::AdamState> states;
    for (auto* p : model.parameters()) states.push_back(afdc::AdamState::init(*p));
    afdc::AdamConfig adam;
    for (auto _ : state) {
        afdc::ForwardCache cache;
        auto pred = afdc::model_forward(model, x, afdc::NnMode::Train, &cache);
        auto loss = afdc::mse_loss(pred, y);
        auto grads = afdc::model_backward(model, cache, loss.dpred);
        auto params = model.parameters();
        for (std::size_t p = 0; p < params.size(); ++p)
            afdc::adam_step(*params[p], grads[p], states[p], adam);
        benchmark::DoNotOptimize(loss.loss);
    }
    state.SetItemsProcessed(state.iterations() * 10);
}
BENCHMARK(BM_train_step);

} // namespace
