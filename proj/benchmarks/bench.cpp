#include <benchmark/benchmark.h>

#include "collusim/engine.hpp"
#include "collusim/stability.hpp"

using namespace collusim;

namespace {

SimConfig decay_config(double delta) {
  SimConfig cfg{.game = make_bertrand(10, 0.1, 1.0, 0.0)};
  cfg.policy = {.kind = PolicyKind::kEpsilonGreedy,
                .epsilon_schedule = ScheduleKind::kExpDecay,
                .beta = 1e-4};
  cfg.update = {.alpha = 0.15, .delta = delta};
  cfg.run = RunKind::kDecay;
  cfg.horizon = 200'000;
  cfg.convergence_window = 200'000;  // never converges: measures raw period cost
  cfg.sessions = 1;
  cfg.master_seed = 1;
  return cfg;
}

void BM_DecaySessionPeriods(benchmark::State& state) {
  const SimConfig cfg = decay_config(0.95);
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_decay_session(cfg, 0));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(cfg.horizon));
}
BENCHMARK(BM_DecaySessionPeriods)->Unit(benchmark::kMillisecond);

void BM_ConstantSessionSkipAhead(benchmark::State& state) {
  SimConfig cfg{.game = make_bertrand(10, 0.1, 1.0, 0.0)};
  cfg.policy = {.kind = PolicyKind::kEpsilonGreedy,
                .epsilon_schedule = ScheduleKind::kConstant,
                .epsilon = 1e-4};
  cfg.update = {.alpha = 0.15, .delta = 0.9};
  cfg.run = RunKind::kConstant;
  cfg.expected_explorations = 1e3;
  cfg.window_expected_explorations = 1e3;
  cfg.sessions = 1;
  cfg.master_seed = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_constant_session(cfg, 0));
  }
  state.SetItemsProcessed(state.iterations() * 10'000'000);  // ceil(T/eps) periods
}
BENCHMARK(BM_ConstantSessionSkipAhead)->Unit(benchmark::kMillisecond);

void BM_SkipClosedFormVsIterate(benchmark::State& state) {
  const bool closed = state.range(0) == 1;
  double q = 5.0;
  for (auto _ : state) {
    if (closed) {
      q = skip_update_closed_form(q, 1.0, 0.15, 0.95, 1000);
    } else {
      for (int i = 0; i < 1000; ++i) q = 0.85 * q + 0.15 * (0.05 + 0.95 * q);
    }
    benchmark::DoNotOptimize(q);
    q += 1.0;
  }
}
BENCHMARK(BM_SkipClosedFormVsIterate)->Arg(0)->Arg(1);

void BM_StabilitySuccessorTable(benchmark::State& state) {
  using namespace collusim::stability;
  GameSpec g = make_prisoners_dilemma(0, 1, 2, 3);
  const GridSpec grid = make_grid(g, 0.5, 0.25);
  const Instance inst(std::move(g), 0.5, 0.5, grid, 1'000'000);
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_successors(inst, 1));
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(inst.state_count()));
}
BENCHMARK(BM_StabilitySuccessorTable)->Unit(benchmark::kMillisecond);

void BM_ArborescenceAllRoots(benchmark::State& state) {
  const std::uint32_t n = static_cast<std::uint32_t>(state.range(0));
  Rng rng(5);
  std::vector<std::uint64_t> cost(static_cast<std::size_t>(n) * n, kInfCost);
  for (std::uint32_t u = 0; u < n; ++u) {
    for (std::uint32_t v = 0; v < n; ++v) {
      if (u != v) cost[u * n + v] = 1 + rng.next_below(2);
    }
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(min_arborescence_costs_all_roots(cost, n, 1));
  }
}
BENCHMARK(BM_ArborescenceAllRoots)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
