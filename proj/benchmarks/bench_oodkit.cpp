// Microbenchmarks for the scoring and evaluation hot paths.

#include <benchmark/benchmark.h>

#include "oodkit/density.hpp"
#include "oodkit/detectors.hpp"
#include "oodkit/metrics.hpp"
#include "oodkit/rng.hpp"

using namespace oodkit;

namespace {

Tensor random_tensor(std::uint64_t seed, std::vector<std::uint32_t> shape, double scale) {
    Rng rng(seed);
    std::vector<float> data(shape_product(shape));
    for (auto& v : data) v = static_cast<float>(scale * (2.0 * rng.next_double() - 1.0));
    return Tensor(std::move(shape), std::move(data));
}

void bm_softmax(benchmark::State& state) {
    const Tensor logits = random_tensor(1, {1, static_cast<std::uint32_t>(state.range(0))}, 3.0);
    for (auto _ : state) benchmark::DoNotOptimize(softmax(logits.row(0)));
}
BENCHMARK(bm_softmax)->Arg(20)->Arg(1000);

void bm_msp(benchmark::State& state) {
    const Tensor logits = random_tensor(2, {static_cast<std::uint32_t>(state.range(0)), 20}, 3.0);
    for (auto _ : state) benchmark::DoNotOptimize(msp_score(logits));
}
BENCHMARK(bm_msp)->Arg(1000)->Arg(10000);

void bm_auroc(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(3);
    std::vector<float> scores(n);
    std::vector<std::uint8_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        scores[i] = static_cast<float>(rng.next_double());
        labels[i] = rng.bernoulli(0.5) ? 1 : 0;
    }
    labels[0] = 1;
    labels[n - 1] = 0;
    for (auto _ : state) benchmark::DoNotOptimize(auroc(scores, labels));
}
BENCHMARK(bm_auroc)->Arg(1000)->Arg(100000);

void bm_lof_score(benchmark::State& state) {
    const Tensor train = random_tensor(4, {static_cast<std::uint32_t>(state.range(0)), 20}, 2.0);
    const Tensor queries = random_tensor(5, {100, 20}, 2.5);
    const LofModel model = lof_fit(train, 20);
    for (auto _ : state) benchmark::DoNotOptimize(lof_score(model, queries));
}
BENCHMARK(bm_lof_score)->Arg(1000)->Arg(4000);

void bm_iforest_score(benchmark::State& state) {
    const Tensor train = random_tensor(6, {4000, 20}, 2.0);
    const Tensor queries =
        random_tensor(7, {static_cast<std::uint32_t>(state.range(0)), 20}, 2.5);
    const IsolationForestModel model = iforest_fit(train, 100, 256, 1);
    for (auto _ : state) benchmark::DoNotOptimize(iforest_score(model, queries));
}
BENCHMARK(bm_iforest_score)->Arg(100)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
