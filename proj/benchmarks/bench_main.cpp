// Hot-path microbenchmarks: the rectangle kernel, the regularized solver
// ladder, the dynamics step, and a small end-to-end assembly.

#include <benchmark/benchmark.h>

#include <random>

#include "trapwave/constants.hpp"
#include "trapwave/fields.hpp"
#include "trapwave/probe.hpp"
#include "trapwave/solver.hpp"
#include "trapwave/waveform.hpp"

using namespace trapwave;

namespace {

void bench_rectangle_kernel(benchmark::State& state) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1e-3, 1e-3);
    double sink = 0.0;
    for (auto _ : state) {
        sink += rectangle_potential_integral(u(rng), u(rng), u(rng), 125e-6, 250e-6);
    }
    benchmark::DoNotOptimize(sink);
}
BENCHMARK(bench_rectangle_kernel);

void bench_continuity_apply(benchmark::State& state) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> gauss;
    Eigen::MatrixXd a(41, 64);
    for (int j = 0; j < 41; ++j)
        for (int i = 0; i < 64; ++i)
            a(j, i) = gauss(rng);
    const SvdFactors f = decompose(a);
    TargetPotential target;
    target.values = Eigen::VectorXd::NullaryExpr(41, [&](Eigen::Index) {
        return gauss(rng);
    });
    target.window = RowWindow{0, 41};
    Eigen::VectorXd v_prev = Eigen::VectorXd::Zero(64);
    const double alpha = 1e-3 * f.s_max();
    for (auto _ : state) {
        benchmark::DoNotOptimize(continuity_apply(f, target, alpha, v_prev).voltages);
    }
}
BENCHMARK(bench_continuity_apply);

void bench_window_svd(benchmark::State& state) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> gauss;
    Eigen::MatrixXd a(41, 64);
    for (int j = 0; j < 41; ++j)
        for (int i = 0; i < 64; ++i)
            a(j, i) = gauss(rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(decompose(a).s);
    }
}
BENCHMARK(bench_window_svd);

void bench_spline_force(benchmark::State& state) {
    Grid grid{0.0, 5e-6, 401};
    Eigen::VectorXd values(grid.count);
    for (Eigen::Index j = 0; j < grid.count; ++j)
        values[j] = std::sin(grid.z(j) / 100e-6);
    const CubicSpline spline(grid.start, grid.step, values);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, grid.back());
    double sink = 0.0;
    for (auto _ : state)
        sink += spline.derivative(u(rng));
    benchmark::DoNotOptimize(sink);
}
BENCHMARK(bench_spline_force);

void bench_small_assembly(benchmark::State& state) {
    TrapConfig config;
    config.segment_count_per_wing = 4;
    config.panels_axial = 2;
    config.panels_transverse = 2;
    const TrapModel model = build_trap(config);
    const double z_mid = 3.0 * config.pitch() / 2.0;
    const Grid grid = axial_grid(z_mid - 200e-6, z_mid + 200e-6, 10e-6);
    for (auto _ : state) {
        benchmark::DoNotOptimize(assemble_matrix(model, grid).entries);
    }
}
BENCHMARK(bench_small_assembly);

}  // namespace

BENCHMARK_MAIN();
