#include <filesystem>
#include <fstream>
#include <sstream>

#include <benchmark/benchmark.h>

#include "geoexpose/analysis.hpp"

namespace {

using namespace geoexpose;
namespace fs = std::filesystem;

const fs::path kToy = fs::path(GEOEXPOSE_SOURCE_DIR) / "tests" / "fixtures" / "pipeline";

struct Inputs {
  LoadedWorld world = load_world(kToy / "cities.csv", kToy / "borders.geojson", kToy / "regions.csv");
  Enrichment enrichment;
  std::string lines;

  Inputs() {
    enrichment.geo = load_geo_table(kToy / "geo.csv");
    enrichment.registry = load_as_registry(kToy / "registry.csv");
    enrichment.origins.add(OriginSnapshots::kAlways, load_origin_table(kToy / "origin.csv"));
    std::ifstream in(kToy / "traceroutes.jsonl");
    std::stringstream ss;
    ss << in.rdbuf();
    lines = ss.str();
  }
};

const Inputs& inputs() {
  static const Inputs i;
  return i;
}

// The 12-record fixture tiled to 12k lines, parsed and analyzed end to end.
void BM_AnalyzeStream(benchmark::State& state) {
  const auto& in = inputs();
  std::string text;
  for (int i = 0; i < 1000; ++i) text += in.lines;
  PairCache cache(in.world.world);
  const AnalysisOptions opts{PipelineOptions{}, static_cast<unsigned>(state.range(0)), 512};
  for (auto _ : state) {
    std::istringstream stream(text);
    auto agg = analyze_stream(stream, "bench.jsonl", in.enrichment, cache, opts);
    benchmark::DoNotOptimize(agg.paths());
  }
  state.SetItemsProcessed(state.iterations() * 12000);
}
BENCHMARK(BM_AnalyzeStream)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
