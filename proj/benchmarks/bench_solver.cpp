#include <benchmark/benchmark.h>

#include <vector>

#include "minmarg/analysis.hpp"
#include "minmarg/closed_form.hpp"
#include "minmarg/finance.hpp"
#include "minmarg/oracle.hpp"
#include "minmarg/solver.hpp"

using namespace minmarg;

namespace {

std::vector<MarginalTable> gaussians(const Mesh& mesh) {
  return std::vector<MarginalTable>(
      mesh.dim(),
      sample_marginal(MarginalSpec::gaussian(0.5, 0.1), mesh));
}

void BM_ResidualAssembly(benchmark::State& state) {
  const Mesh mesh = build_mesh(2, static_cast<int>(state.range(0)));
  const auto marginals = gaussians(mesh);
  const PotentialSet pots = l2_seed(l2_potentials(marginals, mesh));
  for (auto _ : state) {
    auto r = residual_vector(pots, marginals, mesh, 1e-8);
    benchmark::DoNotOptimize(r);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ResidualAssembly)->RangeMultiplier(2)->Range(30, 240)->Complexity();

void BM_JacobianAssembly(benchmark::State& state) {
  const Mesh mesh = build_mesh(2, static_cast<int>(state.range(0)));
  const auto marginals = gaussians(mesh);
  const PotentialSet pots = l2_seed(l2_potentials(marginals, mesh));
  for (auto _ : state) {
    auto j = residual_jacobian(pots, mesh, 1e-8);
    benchmark::DoNotOptimize(j);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_JacobianAssembly)->RangeMultiplier(2)->Range(30, 120)->Complexity();

void BM_SolveAtP3(benchmark::State& state) {
  const Mesh mesh = build_mesh(2, 30);
  const auto marginals = gaussians(mesh);
  const PotentialSet seed = l2_seed(l2_potentials(marginals, mesh));
  for (auto _ : state) {
    auto report = solve_at_p(marginals, mesh, 3.0, seed);
    benchmark::DoNotOptimize(report);
  }
}
BENCHMARK(BM_SolveAtP3);

void BM_ContinuationSweep(benchmark::State& state) {
  const Mesh mesh = build_mesh(2, 30);
  const auto marginals = gaussians(mesh);
  std::vector<double> targets;
  for (int k = 0; k < 10; ++k) targets.push_back(1.2 + 0.2 * k);
  for (auto _ : state) {
    auto reports = continuation_sweep(marginals, mesh, targets);
    benchmark::DoNotOptimize(reports);
  }
}
BENCHMARK(BM_ContinuationSweep);

void BM_MinimalityProbe(benchmark::State& state) {
  const Mesh mesh = build_mesh(2, 30);
  const auto marginals = gaussians(mesh);
  const auto report = continuation_sweep(marginals, mesh, {2.5}).front();
  for (auto _ : state) {
    auto probe = minimality_probe(report.potentials, mesh, 100, 1e-3, 11);
    benchmark::DoNotOptimize(probe);
  }
}
BENCHMARK(BM_MinimalityProbe);

void BM_PrimalOracle(benchmark::State& state) {
  const Mesh mesh = build_mesh(2, 8);
  const auto marginals = gaussians(mesh);
  for (auto _ : state) {
    auto result = solve_primal({mesh, marginals, 3.0}, 1e-6);
    benchmark::DoNotOptimize(result);
  }
}
BENCHMARK(BM_PrimalOracle);

void BM_CarrMadanDecompose(benchmark::State& state) {
  std::vector<double> strikes(201), payoff(201);
  for (int j = 0; j < 201; ++j) {
    strikes[j] = 2.0 * j / 200;
    payoff[j] = strikes[j] * strikes[j];
  }
  for (auto _ : state) {
    auto dec = carr_madan_decompose(strikes, payoff, 1.0);
    auto recon = reconstruct(dec, strikes);
    benchmark::DoNotOptimize(recon);
  }
}
BENCHMARK(BM_CarrMadanDecompose);

}  // namespace

BENCHMARK_MAIN();
