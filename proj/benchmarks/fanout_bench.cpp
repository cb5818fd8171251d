#include <benchmark/benchmark.h>

#include "veld/harness.hpp"

namespace {

void BM_InMemoryFanOut(benchmark::State& state) {
  const veld::World world = veld::default_bench_world();
  veld::ScenarioConfig c;
  c.n_clients = static_cast<std::size_t>(state.range(0));
  c.action_count = 100;
  std::uint64_t events = 0;
  for (auto _ : state) {
    const auto r = veld::run_in_memory(c, world);
    events += r.delivered_events;
    if (!r.converged) state.SkipWithError("diverged");
  }
  state.counters["events/s"] = benchmark::Counter(static_cast<double>(events), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_InMemoryFanOut)->Arg(10)->Arg(50)->Arg(150)->Unit(benchmark::kMillisecond);

}  // namespace
