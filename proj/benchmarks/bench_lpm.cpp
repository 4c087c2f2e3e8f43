#include <random>

#include <benchmark/benchmark.h>

#include "geoexpose/prefix_table.hpp"

namespace {

using namespace geoexpose;

// Prefix lengths skewed toward /16../24, as in real routing tables.
PrefixTable<int> random_table(std::size_t n, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::uint32_t> addr;
  std::discrete_distribution<unsigned> len({0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 1, 1, 2, 2, 8,
                                            2, 3, 4, 6, 6, 8, 8, 50});
  PrefixTable<int> table;
  while (table.size() < n) {
    unsigned l = len(rng);
    table.insert(IpPrefix{IpAddress::from_v4(addr(rng)).masked(l), l}, static_cast<int>(table.size()));
  }
  return table;
}

void BM_Lookup(benchmark::State& state) {
  std::mt19937_64 rng(11);
  auto table = random_table(static_cast<std::size_t>(state.range(0)), rng);
  std::vector<IpAddress> probes;
  std::uniform_int_distribution<std::uint32_t> addr;
  for (int i = 0; i < 4096; ++i) probes.push_back(IpAddress::from_v4(addr(rng)));
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(table.lookup(probes[i++ & 4095]));
}
BENCHMARK(BM_Lookup)->RangeMultiplier(10)->Range(1000, 1000000);

void BM_Build(benchmark::State& state) {
  for (auto _ : state) {
    std::mt19937_64 rng(13);
    auto table = random_table(static_cast<std::size_t>(state.range(0)), rng);
    benchmark::DoNotOptimize(table.size());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Build)->Arg(100000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
