#include <benchmark/benchmark.h>

#include "cipm/admm_directions.hpp"
#include "cipm/ipm_exact.hpp"
#include "cipm/ipm_inexact.hpp"
#include "cipm/netsim.hpp"

namespace {

using namespace cipm;

ProblemGenConfig small_config(int agents) {
  ProblemGenConfig c;
  c.num_agents = agents;
  c.local_size = {10, 15};
  c.num_eq = {2, 3};
  c.num_ineq = {5, 7};
  c.index_pool = 19 * agents;
  c.seed = 1;
  return c;
}

void BM_Linearize(benchmark::State& state) {
  const auto pb = generate(small_config(static_cast<int>(state.range(0)))).problem;
  const auto z = initial_iterate(pb, 1);
  for (auto _ : state) benchmark::DoNotOptimize(admm::linearize(pb, z, 0.1, 0.5, 0));
}
BENCHMARK(BM_Linearize)->Arg(10)->Arg(50);

void BM_AdmmDirection(benchmark::State& state) {
  const auto pb = generate(small_config(static_cast<int>(state.range(0)))).problem;
  const auto z = initial_iterate(pb, 1);
  const std::vector<double> eps(static_cast<std::size_t>(pb.num_agents()), 1e-8);
  for (auto _ : state) benchmark::DoNotOptimize(admm::run(pb, z, 0.1, admm::Settings{}, eps, eps));
}
BENCHMARK(BM_AdmmDirection)->Arg(10)->Arg(50);

void BM_MinConsensus(benchmark::State& state) {
  const auto pb = generate(small_config(static_cast<int>(state.range(0)))).problem;
  const AgentGraph g(pb);
  std::vector<double> v(static_cast<std::size_t>(pb.num_agents()));
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>((i * 7919) % 101);
  for (auto _ : state) benchmark::DoNotOptimize(min_consensus(g, v));
}
BENCHMARK(BM_MinConsensus)->Arg(10)->Arg(50);

void BM_ExactSolve(benchmark::State& state) {
  const auto pb = generate(small_config(4)).problem;
  const auto z = initial_iterate(pb, 1);
  exact::Params params;
  params.max_outer = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(exact::solve(pb, z, params));
}
BENCHMARK(BM_ExactSolve)->Arg(5)->Unit(benchmark::kMillisecond);

void BM_InexactSolve(benchmark::State& state) {
  const auto pb = generate(small_config(4)).problem;
  const auto z = initial_iterate(pb, 1);
  inexact::Params params;
  params.max_outer = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(inexact::solve(pb, z, params));
}
BENCHMARK(BM_InexactSolve)->Arg(5)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
