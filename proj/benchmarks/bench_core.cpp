#include <benchmark/benchmark.h>

#include "dysonchain/chain.hpp"
#include "dysonchain/dyson.hpp"
#include "dysonchain/evolve.hpp"

namespace {

using namespace dyson;

void BM_MatrixExp(benchmark::State& state) {
  FockConfig cfg{int(state.range(0)), 5, 1e-8};
  auto [a, ad] = build_ladder(cfg);
  OperatorMatrix m = 0.3 * a + 0.3 * ad + kI * 0.1 * (ad * a);
  for (auto _ : state) {
    benchmark::DoNotOptimize(matrix_exp(m));
  }
}
BENCHMARK(BM_MatrixExp)->Arg(40)->Arg(60);

void BM_GaussDecomposeResidual(benchmark::State& state) {
  FockConfig cfg{60, 30, 1e-8};
  Su11Params p = gauss_decompose(0.4, Complex(0.1, 0.05));
  for (auto _ : state) {
    benchmark::DoNotOptimize(gauss_residual(p, cfg));
  }
}
BENCHMARK(BM_GaussDecomposeResidual);

void BM_GammaOdeSolve(benchmark::State& state) {
  LinearModel model{constant_track(1.0), CoefficientTrack("0.2*sin(t)"),
                    CoefficientTrack("0.4*sin(t)")};
  FockConfig cfg{40, 5, 1e-8};
  TimeGrid grid{0.0, 1e-3, int(state.range(0))};
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_gamma_ode(model, Complex(0.05, 0.0), grid, cfg));
  }
}
BENCHMARK(BM_GammaOdeSolve)->Arg(1000);

void BM_SchrodingerLikeStep(benchmark::State& state) {
  FockConfig cfg{int(state.range(0)), 5, 1e-8};
  LinearModel model{constant_track(1.0), constant_track(0.2), constant_track(0.4)};
  auto H = [&](double t) { return build_linear_hamiltonian(model, t, cfg); };
  TimeGrid grid{0.0, 1e-3, 50};
  OperatorMatrix eta0 = OperatorMatrix::Identity(cfg.dim, cfg.dim);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_schrodinger_like(H, eta0, grid, cfg));
  }
}
BENCHMARK(BM_SchrodingerLikeStep)->Arg(24)->Arg(40);

void BM_FlatPropagation(benchmark::State& state) {
  FockConfig cfg{40, 5, 1e-8};
  LinearModel model{constant_track(1.0), constant_track(0.3), constant_track(0.3)};
  auto h = [&](double t) { return build_linear_hamiltonian(model, t, cfg); };
  TimeGrid grid{0.0, 1e-3, 100};
  StateCol phi0 = coherent_state(Complex(0.5, 0.0), cfg);
  for (auto _ : state) {
    benchmark::DoNotOptimize(propagate_flat(h, phi0, grid, cfg));
  }
}
BENCHMARK(BM_FlatPropagation);

}  // namespace

BENCHMARK_MAIN();
