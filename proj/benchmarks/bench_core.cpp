#include "mcre/conditions.hpp"
#include "mcre/coupling.hpp"
#include "mcre/goodtimes.hpp"
#include "mcre/models.hpp"
#include "mcre/stationary.hpp"

#include <benchmark/benchmark.h>

#include <cmath>

namespace {

using namespace mcre;

models::ModelBundle tarx() {
    return models::make_tarx({[](PointView x) { return 0.5 * std::tanh(x[0]); }, [](PointView) { return 0.1; },
                              [](PointView) { return 0.4; }, [](PointView) { return 0.0; }, [](PointView) { return 0.0; }},
                             models::NoiseSpec::gaussian(1.0));
}

void BM_EnvironmentRealize(benchmark::State& state) {
    const auto spec = EnvironmentSpec::gaussian_ar1(0.7, 1.0);
    const auto n = state.range(0);
    std::uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(realize(spec, ++seed, -n, 0));
    state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_EnvironmentRealize)->Arg(1 << 12)->Arg(1 << 16);

void BM_TarxKernelStep(benchmark::State& state) {
    const auto m = tarx();
    Stream rng(1);
    Point y{0.0}, next{0.0};
    const Point x{0.3};
    for (auto _ : state) {
        m.kernel.sample(x, y, rng, next);
        std::swap(y, next);
    }
    benchmark::DoNotOptimize(y);
}
BENCHMARK(BM_TarxKernelStep);

void BM_CoupledStep(benchmark::State& state) {
    const auto m = tarx();
    const Stream root(2);
    CoupledState s{{0.5}, {-0.5}, false};
    const Point x{0.3};
    std::uint64_t t = 0;
    for (auto _ : state) {
        auto next = coupled_step(m.kernel, m.minorization, m.drift.V, 1.0, x, s, root.split(++t));
        if (next.coalesced) next = {{0.5}, {-0.5}, false};
        s = std::move(next);
    }
}
BENCHMARK(BM_CoupledStep);

void BM_ResidualSample(benchmark::State& state) {
    const auto m = tarx();
    Stream rng(3);
    const Point x{0.3}, y{0.4};
    for (auto _ : state) benchmark::DoNotOptimize(residual_sample(m.kernel, m.minorization, 1.0, x, y, rng));
}
BENCHMARK(BM_ResidualSample);

void BM_CoalescenceCurve(benchmark::State& state) {
    const auto m = tarx();
    CurveOptions o;
    o.R = 2.0;
    const auto replicas = static_cast<std::size_t>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(coalescence_curve(m.kernel, m.minorization, m.drift.V, EnvironmentSpec::iid_normal(0.0, 1.0),
                                                   {3.0}, {-3.0}, {10, 20, 40}, replicas, 7, o));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(replicas) * 70);
}
BENCHMARK(BM_CoalescenceCurve)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_ExactBackwardLaw(benchmark::State& state) {
    Matrix a(3, 3), b(3, 3);
    a << 0.5, 0.3, 0.2, 0.2, 0.5, 0.3, 0.3, 0.2, 0.5;
    b << 0.9, 0.1, 0.0, 0.1, 0.8, 0.1, 0.0, 0.1, 0.9;
    const auto m = models::make_finite({a, b});
    Matrix T(2, 2);
    T << 0.7, 0.3, 0.4, 0.6;
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto env = realize(EnvironmentSpec::finite_markov(T), 4, -static_cast<std::int64_t>(n), 0);
    for (auto _ : state) benchmark::DoNotOptimize(backward_law_exact(m.kernel, env, {0.0}, n));
}
BENCHMARK(BM_ExactBackwardLaw)->Arg(50)->Arg(1000);

void BM_LyapunovExponent(benchmark::State& state) {
    const MatrixFn A = [](PointView x) {
        Matrix m(2, 2);
        m << 0.3 * x[0], 0.2, 1.0, 0.0;
        return m;
    };
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto env = realize(EnvironmentSpec::iid_uniform(-1.0, 1.0), 5, -static_cast<std::int64_t>(n), 0);
    for (auto _ : state) benchmark::DoNotOptimize(lyapunov_exponent(A, env, n));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_LyapunovExponent)->Arg(10000);

void BM_GoodTimes(benchmark::State& state) {
    const auto m = models::make_rca([](PointView x) { return 0.1 + 0.35 * (1.0 + std::tanh(x[0])) / 2.0; },
                                    models::NoiseSpec::laplace(1.0));
    const auto n = state.range(0);
    const auto env = realize(EnvironmentSpec::gaussian_ar1(0.6, 0.8), 6, -2 * n, 0);
    for (auto _ : state) {
        const GoodSetEvaluator ev(env, m.drift.lambda, m.drift.b, m.minorization);
        benchmark::DoNotOptimize(good_times(ev, find_C(ev), -n, -1));
    }
    state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_GoodTimes)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_LlnAverage(benchmark::State& state) {
    const auto m = tarx();
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto env = realize(EnvironmentSpec::iid_normal(0.0, 1.0), 8, -1000, static_cast<std::int64_t>(n));
    const ScalarFn f = [](PointView y) { return std::abs(y[0]) <= 1.0 ? 1.0 : 0.0; };
    for (auto _ : state) benchmark::DoNotOptimize(lln_average(m.kernel, env, f, n, 1000, Stream(9)));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_LlnAverage)->Arg(100000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
