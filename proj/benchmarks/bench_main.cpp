#include <random>

#include <benchmark/benchmark.h>

#include "wdje/baselines.hpp"
#include "wdje/harness.hpp"
#include "wdje/ot.hpp"

namespace {

using namespace wdje;

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
    }
    return m;
}

void BM_EmdExact(benchmark::State& state) {
    const auto n = state.range(0);
    const auto u = empirical_measure(gaussian(n, 8, 1));
    const auto v = empirical_measure(gaussian(n, 8, 2));
    const auto cost = ot::ground_cost(u, v, ot::GroundMetric::euclidean);
    for (auto _ : state) benchmark::DoNotOptimize(ot::emd_exact(u, v, cost).objective);
}
BENCHMARK(BM_EmdExact)->Arg(50)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_Sinkhorn(benchmark::State& state) {
    const auto n = state.range(0);
    const auto u = empirical_measure(gaussian(n, 8, 1));
    const auto v = empirical_measure(gaussian(n, 8, 2));
    const auto cost = ot::ground_cost(u, v, ot::GroundMetric::euclidean);
    const double epsilon = 0.1 * cost.values.mean();
    for (auto _ : state) benchmark::DoNotOptimize(ot::sinkhorn(u, v, cost, epsilon).objective);
}
BENCHMARK(BM_Sinkhorn)->Arg(50)->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);

void BM_Wasserstein1d(benchmark::State& state) {
    const auto n = state.range(0);
    const auto u = empirical_measure(gaussian(n, 1, 1));
    const auto v = empirical_measure(gaussian(n, 1, 2));
    for (auto _ : state) benchmark::DoNotOptimize(ot::wasserstein_1d(u, v));
}
BENCHMARK(BM_Wasserstein1d)->Arg(1000)->Arg(100000);

void BM_Logme(benchmark::State& state) {
    const auto n = state.range(0);
    const Matrix f = gaussian(n, 32, 3);
    Vector y(n);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = static_cast<double>(i % 10);
    for (auto _ : state) benchmark::DoNotOptimize(baselines::logme(f, y, TaskSpec::classification(10)).value);
}
BENCHMARK(BM_Logme)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_HScore(benchmark::State& state) {
    const auto n = state.range(0);
    const Matrix f = gaussian(n, 32, 4);
    Vector y(n);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = static_cast<double>(i % 10);
    for (auto _ : state) benchmark::DoNotOptimize(baselines::hscore(f, y));
}
BENCHMARK(BM_HScore)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_SweepCell(benchmark::State& state) {
    harness::SyntheticConfig cfg;
    cfg.mean_shift = 1.0;
    const auto [source, target] = harness::gen_synthetic_pair(cfg);
    const harness::PipelineConfig pipeline;
    for (auto _ : state) {
        benchmark::DoNotOptimize(harness::run_cell(source, target, std::nullopt, 0.5, 0, pipeline).bound_total);
    }
}
BENCHMARK(BM_SweepCell)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
