#include "wmcf/flow.hpp"
#include "wmcf/grid.hpp"
#include "wmcf/sharp.hpp"
#include "wmcf/variations.hpp"
#include "wmcf/wells.hpp"

#include <benchmark/benchmark.h>

#include <cmath>

using namespace wmcf;

namespace {

grid::Grid square(int n) { return grid::Grid::rect(n, n, {-0.5, -0.5}, {0.5, 0.5}); }

// Five cells per eps on the unit square.
double eps_for(int n) { return 5.0 / n; }

flow::PhaseState disk_state(int n) {
  const auto spec = wells::canonical_quartic();
  const auto A = sharp::SharpInterface::sphere({0.0, 0.0}, 0.15);
  return variations::build_recovery(A, spec, square(n), eps_for(n)).state;
}

void BM_Laplacian(benchmark::State& st) {
  const auto g = square(static_cast<int>(st.range(0)));
  const auto f = grid::Field::sample(g, [](Point x) { return std::sin(3.0 * x.x) * std::cos(2.0 * x.y); });
  for (auto _ : st) benchmark::DoNotOptimize(grid::laplacian_neumann(f));
  st.SetItemsProcessed(st.iterations() * static_cast<int64_t>(g.size()));
}
BENCHMARK(BM_Laplacian)->Arg(128)->Arg(256)->Arg(512);

void BM_Helmholtz(benchmark::State& st) {
  const auto g = square(static_cast<int>(st.range(0)));
  const grid::HelmholtzSolver solver(g, 1.0, 1e-3);
  const auto b = grid::Field::sample(g, [](Point x) { return std::exp(-20.0 * (x.x * x.x + x.y * x.y)); });
  for (auto _ : st) {
    std::vector<double> x(g.size(), 0.0);
    benchmark::DoNotOptimize(solver.solve(b.values(), x));
  }
}
BENCHMARK(BM_Helmholtz)->Arg(128)->Arg(256)->Arg(512);

void BM_SemiImplicitStep(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  const auto spec = wells::canonical_quartic();
  const auto state = disk_state(n);
  const flow::SemiImplicitStepper stepper(state.u.grid(), spec, eps_for(n), 1e-5);
  for (auto _ : st) benchmark::DoNotOptimize(stepper.step(state));
}
BENCHMARK(BM_SemiImplicitStep)->Arg(128)->Arg(256);

void BM_SurfaceTension(benchmark::State& st) {
  const auto spec = wells::canonical_quartic();
  double x = 0.0;
  for (auto _ : st) {
    benchmark::DoNotOptimize(wells::surface_tension(spec, {x, 0.1}));
    x += 1e-3;
  }
}
BENCHMARK(BM_SurfaceTension);

void BM_Recovery(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(disk_state(n));
}
BENCHMARK(BM_Recovery)->Arg(128)->Arg(256);

void BM_FirstVariation(benchmark::State& st) {
  const auto spec = wells::canonical_quartic();
  const auto state = disk_state(256);
  const auto psi = variations::dilation({0.0, 0.0}, 0.3, 0.4);
  for (auto _ : st) benchmark::DoNotOptimize(variations::diffuse_first_variation(state, spec, psi));
}
BENCHMARK(BM_FirstVariation);

}  // namespace

BENCHMARK_MAIN();
