#include <benchmark/benchmark.h>

#include "ackscope/config.hpp"
#include "ackscope/inference.hpp"
#include "ackscope/rng.hpp"
#include "ackscope/simulation.hpp"

using namespace ackscope;

namespace {

Scenario load(const char* name) { return load_scenario(std::string(ACKSCOPE_SCENARIO_DIR) + "/" + name); }

void BM_RunReplay(benchmark::State& state) {
  auto sc = load("replay_multi_device.yaml");
  std::size_t samples = 0;
  for (auto _ : state) {
    auto r = run_scenario(sc);
    samples = r.samples.size();
    benchmark::DoNotOptimize(r.probes_sent);
  }
  state.counters["samples"] = static_cast<double>(samples);
}
BENCHMARK(BM_RunReplay)->Unit(benchmark::kMillisecond);

void BM_ClassifyStates(benchmark::State& state) {
  auto sc = load("states/iphone11_whatsapp.yaml");
  auto r = run_scenario(sc);
  const auto& dev = sc.victim.devices.front();
  auto model = StateClassifierModel::from_profile(dev.profile, nominal_network_offset_ms(dev.link));
  std::vector<RttSample> stream;
  for (const auto& s : r.samples)
    if (s.device_index == dev.index) stream.push_back(s);
  for (auto _ : state) benchmark::DoNotOptimize(classify_states(stream, model, &dev.profile));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(stream.size()));
}
BENCHMARK(BM_ClassifyStates);

void BM_Pelt(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(7);
  std::vector<double> xs(n);
  for (std::size_t i = 0; i < n; ++i) xs[i] = (i / 200 % 2 ? 2000.0 : 1000.0) + 50.0 * rng.normal();
  const double penalty = 3.0 * 50.0 * 50.0 * std::log(static_cast<double>(n));
  for (auto _ : state) benchmark::DoNotOptimize(pelt_change_points(xs, penalty, 3));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Pelt)->RangeMultiplier(4)->Range(256, 16384)->Complexity();

}  // namespace

BENCHMARK_MAIN();
