#include <benchmark/benchmark.h>

#include "vibtomo/eval/metrics.hpp"
#include "vibtomo/fem/assembly.hpp"
#include "vibtomo/inverse/solver.hpp"
#include "vibtomo/modal/eigensolver.hpp"
#include "vibtomo/observation/modes.hpp"
#include "vibtomo/observation/sampling.hpp"
#include "vibtomo/observation/spectrum.hpp"

using namespace vibtomo;

namespace {

obs::ProjectionModel camera() {
    return obs::look_along(Eigen::Vector3d(-1, 1, -1).normalized(), Eigen::Vector3d::UnitZ(), 1e4);
}

struct Cube {
    fem::VoxelGrid grid;
    fem::Mesh mesh;
    fem::UnitMatrixSet units;
    fem::MaterialField field;

    explicit Cube(int n)
        : grid({n, n, n}, 0.05 / n),
          mesh(fem::build_cube_mesh(grid, fem::CubeFace::Bottom)),
          units(fem::assemble_unit_matrices(mesh, 0.3)),
          field(fem::MaterialField::homogeneous(grid.size(), 9000, 1270)) {}
};

void BM_UnitMatrices(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    fem::VoxelGrid grid({n, n, n}, 0.05 / n);
    const auto mesh = fem::build_cube_mesh(grid, fem::CubeFace::Bottom);
    for (auto _ : state) benchmark::DoNotOptimize(fem::assemble_unit_matrices(mesh, 0.3));
}
BENCHMARK(BM_UnitMatrices)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_AssembleGlobal(benchmark::State& state) {
    Cube c(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(fem::assemble_global(c.units, c.field));
}
BENCHMARK(BM_AssembleGlobal)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_SolveModes(benchmark::State& state) {
    Cube c(static_cast<int>(state.range(0)));
    const auto sys = fem::assemble_global(c.units, c.field);
    for (auto _ : state) benchmark::DoNotOptimize(modal::solve_modes(sys, 20));
}
BENCHMARK(BM_SolveModes)->Arg(6)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_PowerSpectrum(benchmark::State& state) {
    obs::ImageSeries s;
    s.fps = 2000;
    s.frames = Eigen::MatrixXd::Random(static_cast<int>(state.range(0)), 434);
    for (auto _ : state) benchmark::DoNotOptimize(obs::power_spectrum(s, obs::Window::Hann));
}
BENCHMARK(BM_PowerSpectrum)->Arg(2048)->Arg(6000)->Unit(benchmark::kMillisecond);

// One outer iteration of the inversion (modes block, material block, dual update).
void BM_InversionIteration(benchmark::State& state) {
    Cube c(static_cast<int>(state.range(0)));
    const int k = static_cast<int>(state.range(1));
    const auto sampler = obs::build_sampling_operator(c.mesh, camera());
    const auto modes = obs::observe_modes(modal::solve_modes(fem::assemble_global(c.units, c.field), k), sampler.P, k);
    auto cfg = inv::InversionConfig::cube_defaults();
    cfg.max_iters = 1;
    const auto problem = inv::make_problem(c.units, c.grid, sampler.P, modes, cfg);
    for (auto _ : state) benchmark::DoNotOptimize(inv::run_inversion(problem, cfg));
}
BENCHMARK(BM_InversionIteration)->Args({6, 10})->Args({8, 10})->Unit(benchmark::kMillisecond)->Iterations(3);

void BM_GaussianBlur(benchmark::State& state) {
    fem::VoxelGrid grid({16, 16, 16}, 1.0);
    const Eigen::VectorXd f = Eigen::VectorXd::Random(grid.size());
    for (auto _ : state) benchmark::DoNotOptimize(eval::gaussian_blur(f, grid, 1.5));
}
BENCHMARK(BM_GaussianBlur)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
