// Serial reference vs OpenMP kernels on the same synthetic maps.
// Arg 0 selects the execution mode (0 serial, 1 parallel).

#include <benchmark/benchmark.h>

#include <map>
#include <memory>
#include <vector>

#include "mapselect/greedy.hpp"
#include "mapselect/simeval.hpp"
#include "mapselect/utilities.hpp"

using namespace mapselect;

namespace {

std::shared_ptr<const SlamMap> world_map(std::size_t points_per_frame) {
  static std::map<std::size_t, std::shared_ptr<const SlamMap>> cache;
  auto& slot = cache[points_per_frame];
  if (!slot) {
    WorldSpec spec;
    spec.points_per_frame = points_per_frame;
    slot = std::make_shared<const SlamMap>(SlamMap::build(generate_world(spec).data));
  }
  return slot;
}

Exec exec_of(const benchmark::State& state) { return state.range(0) ? Exec::parallel : Exec::serial; }

void run_greedy(benchmark::State& state, UtilityKind kind, std::size_t points_per_frame, bool lazy) {
  const auto map = world_map(points_per_frame);
  const auto problem =
      SelectionProblem::with_last_frame_forced(map, Budget::parse("15%").resolve(map->num_points()));
  const auto base = make_utility(kind, problem, {});
  std::size_t evals = 0;
  for (auto _ : state) {
    auto s = base->clone();
    const Selection sel = lazy ? lazy_greedy(problem, *s, problem.budget, exec_of(state))
                               : classic_greedy(problem, *s, problem.budget, exec_of(state));
    evals = sel.evaluations;
    benchmark::DoNotOptimize(sel.value);
  }
  state.counters["n"] = static_cast<double>(map->num_points());
  state.counters["gain_evals"] = static_cast<double>(evals);
  state.counters["threads"] = state.range(0) ? worker_count() : 1;
}

void BM_LazyOdom(benchmark::State& s) { run_greedy(s, UtilityKind::odom, 300, true); }
void BM_LazyLocal(benchmark::State& s) { run_greedy(s, UtilityKind::local, 300, true); }
void BM_LazySlam(benchmark::State& s) { run_greedy(s, UtilityKind::slam, 30, true); }
void BM_ClassicOdom(benchmark::State& s) { run_greedy(s, UtilityKind::odom, 30, false); }

void BM_StochasticOdom(benchmark::State& state) {
  const auto map = world_map(300);
  const auto problem =
      SelectionProblem::with_last_frame_forced(map, Budget::parse("15%").resolve(map->num_points()));
  const auto base = make_utility(UtilityKind::odom, problem, {});
  for (auto _ : state) {
    auto s = base->clone();
    benchmark::DoNotOptimize(stochastic_greedy(problem, *s, problem.budget, 0.05, 1, exec_of(state)).value);
  }
}

void BM_SlamContributions(benchmark::State& state) {
  // Per-point Schur marginals are built in parallel at construction.
  const auto map = world_map(75);
  const auto problem = SelectionProblem::make(map, 0, {});
  set_worker_count(state.range(0) ? 0 : 1);
  for (auto _ : state) benchmark::DoNotOptimize(make_utility(UtilityKind::slam, problem, {}));
  set_worker_count(0);
}

void BM_Sweep(benchmark::State& state) {
  WorldSpec spec;
  spec.frames = 30;
  RunConfig config;
  config.exec = exec_of(state);
  const std::vector<Method> kinds{*Method::parse("odom"), *Method::parse("random")};
  const std::vector<Budget> budgets{Budget::parse("20%")};
  for (auto _ : state) benchmark::DoNotOptimize(budget_sweep(spec, kinds, budgets, {1, 2}, config).size());
}

}  // namespace

BENCHMARK(BM_LazyOdom)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LazyLocal)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LazySlam)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ClassicOdom)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_StochasticOdom)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SlamContributions)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Sweep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->Iterations(1);

BENCHMARK_MAIN();
