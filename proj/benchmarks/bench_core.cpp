#include "deepesn/readout.hpp"
#include "deepesn/reservoir.hpp"
#include "deepesn/stats.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

using namespace deepesn;

namespace {

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        m.data()[i] = normal(rng);
    }
    return m;
}

void reservoir_step(benchmark::State& state) {
    LayerConfig config;
    config.units = static_cast<std::size_t>(state.range(0));
    config.leak_rate = 0.9;
    const auto layer = init_layer(config, 1, 3);
    Vector x = Vector::Zero(static_cast<Eigen::Index>(config.units));
    Vector u(1);
    u << 0.25;
    for (auto _ : state) {
        layer.advance(x, u);
        benchmark::DoNotOptimize(x.data());
    }
}
BENCHMARK(reservoir_step)->Arg(100)->Arg(300)->Arg(1000);

void window_features_deep(benchmark::State& state) {
    LayerConfig layer;
    layer.units = 100;
    layer.leak_rate = 0.9;
    auto config = DeepEsnConfig::uniform(layer, static_cast<std::size_t>(state.range(0)));
    config.seed = 5;
    const auto model = DeepEsnModel::create(config, 1);
    const Matrix window = gaussian(6, 1, 9);
    for (auto _ : state) {
        benchmark::DoNotOptimize(model.window_features(window));
    }
}
BENCHMARK(window_features_deep)->Arg(1)->Arg(2)->Arg(4);

void ridge_fit(benchmark::State& state) {
    const Matrix z = gaussian(state.range(0), 200, 1);
    const Matrix y = gaussian(state.range(0), 1, 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit_ridge(z, y, 0.1).weights.data());
    }
}
BENCHMARK(ridge_fit)->Arg(1000)->Arg(5000);

void pinv_fit(benchmark::State& state) {
    const Matrix z = gaussian(state.range(0), 200, 1);
    const Matrix y = gaussian(state.range(0), 1, 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit_pinv(z, y).weights.data());
    }
}
BENCHMARK(pinv_fit)->Arg(1000);

void wilcoxon_exact(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(4);
    std::normal_distribution<double> normal;
    std::vector<double> a(n);
    std::vector<double> b(n);
    for (std::size_t i = 0; i < n; ++i) {
        a[i] = normal(rng);
        b[i] = normal(rng);
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(wilcoxon_signed_rank(a, b, 0.05).p_value);
    }
}
BENCHMARK(wilcoxon_exact)->Arg(10)->Arg(25)->Arg(40);

void friedman_gate(benchmark::State& state) {
    const Matrix scores = gaussian(10, state.range(0), 6);
    for (auto _ : state) {
        benchmark::DoNotOptimize(friedman_test(scores, 0.05).p_value);
    }
}
BENCHMARK(friedman_gate)->Arg(5)->Arg(13);

}  // namespace
BENCHMARK_MAIN();
