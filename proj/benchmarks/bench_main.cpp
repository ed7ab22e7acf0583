#include <benchmark/benchmark.h>

#include "aggdiff/assembly.hpp"
#include "aggdiff/data_pipeline.hpp"
#include "aggdiff/fv_solver.hpp"
#include "aggdiff/pipeline.hpp"
#include "aggdiff/sparse_solvers.hpp"

using namespace aggdiff;

namespace {

// Short example1-desk run observed on the coarse mesh, built once.
struct Shared {
  ExperimentConfig config = [] {
    ExperimentConfig c = preset("example1-desk");
    c.T = 0.1;
    return c;
  }();
  BasisSet basis = make_basis(config.basis);
  DensityTrajectory data = observations(config, simulate(config));
  LinearSystem system = assemble_direct(basis, data, config.model);
};

const Shared& shared() {
  static const Shared s;
  return s;
}

void BM_SolverSteps(benchmark::State& state) {
  const double dx = 12.0 / static_cast<double>(state.range(0));
  const ExperimentConfig c = preset("example1");
  SolverConfig sc;
  sc.grid = Grid::make_1d(c.R, dx, 1e-5, 1e-4);
  const auto rho0 = initial_slice(c.initial, sc.grid);
  for (auto _ : state) benchmark::DoNotOptimize(solve(c.model, rho0, sc));
  state.SetItemsProcessed(state.iterations() * 10);
}
BENCHMARK(BM_SolverSteps)->Arg(300)->Arg(600)->Arg(1200)->Unit(benchmark::kMillisecond);

void BM_ConvC(benchmark::State& state) {
  const Shared& s = shared();
  for (auto _ : state) benchmark::DoNotOptimize(conv_C(s.basis, s.data));
}
BENCHMARK(BM_ConvC)->Unit(benchmark::kMillisecond);

void BM_AssembleDirect(benchmark::State& state) {
  const Shared& s = shared();
  for (auto _ : state) benchmark::DoNotOptimize(assemble_direct(s.basis, s.data, s.config.model));
}
BENCHMARK(BM_AssembleDirect)->Unit(benchmark::kMillisecond);

void BM_AssembleViaG(benchmark::State& state) {
  const Shared& s = shared();
  for (auto _ : state) {
    const GKernel G = assemble_G(s.data);
    benchmark::DoNotOptimize(assemble_via_G(s.basis, G, s.data, s.config.model));
  }
}
BENCHMARK(BM_AssembleViaG)->Unit(benchmark::kMillisecond);

void BM_PartInv(benchmark::State& state) {
  const Shared& s = shared();
  const int K = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(partinv(s.system.A, s.system.b, K));
}
BENCHMARK(BM_PartInv)->Arg(1)->Arg(2)->Arg(4);

}  // namespace

BENCHMARK_MAIN();
