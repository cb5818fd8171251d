#include <benchmark/benchmark.h>

#include <random>

#include "veld/audio.hpp"

namespace {

const veld::AudioZone kZone{0.5, 1.0, 1.0 / 64.0};

std::map<std::string, veld::Vec3> scatter(int n) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> coord(-50.0, 50.0);
  std::map<std::string, veld::Vec3> out;
  for (int i = 0; i < n; ++i) out["c" + std::to_string(i)] = {coord(rng), 0.0, coord(rng)};
  return out;
}

void BM_GainMatrix(benchmark::State& state) {
  const auto positions = scatter(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(veld::gain_matrix(kZone, positions));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}
BENCHMARK(BM_GainMatrix)->Arg(30)->Arg(150);

void BM_GroupPrivacy(benchmark::State& state) {
  const auto positions = scatter(150);
  std::map<std::string, std::string> groups;
  int i = 0;
  for (const auto& [id, p] : positions) groups[id] = "g" + std::to_string(i++ % 5);
  for (auto _ : state) benchmark::DoNotOptimize(veld::check_group_privacy(kZone, groups, positions));
}
BENCHMARK(BM_GroupPrivacy);

}  // namespace
