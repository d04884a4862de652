#include <benchmark/benchmark.h>

#include <random>

#include "mecsim/lyapunov_alloc.hpp"
#include "mecsim/mlp.hpp"
#include "mecsim/simulator.hpp"

using namespace mecsim;

namespace {

std::vector<double> random_backlog(std::size_t n, double scale, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, scale);
  std::vector<double> q(n);
  for (auto& x : q) x = u(gen);
  return q;
}

void BM_SolveLocal(benchmark::State& state) {
  const auto q = random_backlog(static_cast<std::size_t>(state.range(0)), 5e7, 1);
  const PenaltyWeights w;
  for (auto _ : state) benchmark::DoNotOptimize(solve_local(q, 1e9, w, 0.01));
}
BENCHMARK(BM_SolveLocal)->Arg(2)->Arg(8)->Arg(32);

void BM_SolveTransmission(benchmark::State& state) {
  const auto q = random_backlog(static_cast<std::size_t>(state.range(0)), 1e5, 2);
  const PenaltyWeights w;
  for (auto _ : state) benchmark::DoNotOptimize(solve_transmission(q, 0.3, 6e-11, 2.5e5, 3.98e-21, w, 0.01));
}
BENCHMARK(BM_SolveTransmission)->Arg(2)->Arg(8)->Arg(32);

void BM_SolveEdge(benchmark::State& state) {
  const auto q = random_backlog(static_cast<std::size_t>(state.range(0)), 5e8, 3);
  for (auto _ : state) benchmark::DoNotOptimize(solve_edge(q, 2e10, 0.01));
}
BENCHMARK(BM_SolveEdge)->Arg(8)->Arg(64)->Arg(256);

void BM_RunSlot(benchmark::State& state) {
  const Environment env = Environment::build(ExperimentConfig{});
  SystemState s = env.initial_state();
  Rng ch = make_rng(1, Stream::kChannel);
  Rng ar = make_rng(1, Stream::kArrivals);
  for (auto _ : state) benchmark::DoNotOptimize(run_slot(s, env, ch, ar));
}
BENCHMARK(BM_RunSlot);

void BM_MlpForwardBackward(benchmark::State& state) {
  Mlp net({80, 128, 128, 88});
  Rng rng = make_rng(1, Stream::kInit);
  net.initialize(rng);
  const auto x = random_backlog(80, 1.0, 4);
  const std::vector<double> g(88, 1.0);
  std::vector<double> grad(net.num_params());
  Mlp::Cache cache;
  for (auto _ : state) {
    benchmark::DoNotOptimize(net.forward(x, cache));
    net.backward(cache, g, grad);
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_MlpForwardBackward);

}  // namespace
BENCHMARK_MAIN();
