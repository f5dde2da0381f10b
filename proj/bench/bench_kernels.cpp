// Parallel kernels vs. their serial references, plus one full training step.
#include <benchmark/benchmark.h>

#include <vector>

#include "emotionbox/nn/kernels.hpp"
#include "emotionbox/nn/model.hpp"
#include "emotionbox/rng.hpp"

namespace {

using namespace ebox::nn;

std::vector<float> random_vec(std::size_t n, std::uint64_t seed) {
    ebox::Rng rng(seed);
    std::vector<float> v(n);
    for (auto& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
    return v;
}

template <void (*Kernel)(int, int, int, std::span<const float>, std::span<const float>, std::span<float>)>
void BM_Gemm(benchmark::State& state) {
    const int m = static_cast<int>(state.range(0));
    const int n = static_cast<int>(state.range(1));
    const int k = static_cast<int>(state.range(2));
    // Sized for the largest operand layout among nn/tn/nt.
    const auto a = random_vec(static_cast<std::size_t>(m) * std::max(n, k), 1);
    const auto b = random_vec(static_cast<std::size_t>(std::max(m, k)) * std::max(n, k), 2);
    std::vector<float> c(static_cast<std::size_t>(std::max(m, k)) * std::max(n, k));
    for (auto _ : state) {
        Kernel(m, n, k, a, b, c);
        benchmark::DoNotOptimize(c.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long long>(m) * n * k);
}

#define GEMM_ARGS ->Args({64, 512, 512})->Args({398, 512, 265})->Args({398, 240, 512})->Args({1, 512, 512})

BENCHMARK(BM_Gemm<kernels::gemm_nn<float>>) GEMM_ARGS;
BENCHMARK(BM_Gemm<kernels::reference::gemm_nn<float>>) GEMM_ARGS;
BENCHMARK(BM_Gemm<kernels::gemm_tn<float>>) GEMM_ARGS;
BENCHMARK(BM_Gemm<kernels::reference::gemm_tn<float>>) GEMM_ARGS;
BENCHMARK(BM_Gemm<kernels::gemm_nt<float>>) GEMM_ARGS;
BENCHMARK(BM_Gemm<kernels::reference::gemm_nt<float>>) GEMM_ARGS;

void BM_TrainStep(benchmark::State& state) {
    ModelConfig cfg;
    cfg.hidden = static_cast<int>(state.range(0));
    cfg.fc_dim = cfg.hidden;
    const auto params = init_params<float>(cfg, 7);
    SequenceBatch batch;
    batch.batch_size = static_cast<int>(state.range(1));
    batch.steps = 199;
    ebox::Rng rng(3);
    const auto n = static_cast<std::size_t>(batch.batch_size * batch.steps);
    for (std::size_t i = 0; i < n; ++i) {
        batch.inputs.push_back(static_cast<int>(rng.below(240)));
        batch.targets.push_back(static_cast<int>(rng.below(240)));
    }
    batch.conditioning.assign(n * 25, 0.0f);
    auto grads = ModelParams<float>::zeros(cfg);
    for (auto _ : state) {
        benchmark::DoNotOptimize(loss_and_gradients(params, batch, true, 11, grads));
    }
}
BENCHMARK(BM_TrainStep)->Args({64, 8})->Args({512, 2})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
