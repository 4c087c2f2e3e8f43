#include <filesystem>
#include <numbers>
#include <random>

#include <benchmark/benchmark.h>

#include "geoexpose/normality.hpp"
#include "geoexpose/sphere.hpp"

namespace {

using namespace geoexpose;
namespace fs = std::filesystem;

std::vector<GeoPoint> cap_points(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> lat(20.0, 50.0), lon(60.0, 120.0);
  std::vector<GeoPoint> out;
  for (std::size_t i = 0; i < n; ++i) out.emplace_back(lat(rng), lon(rng));
  return out;
}

void BM_ConvexHull(benchmark::State& state) {
  auto pts = cap_points(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) {
    auto h = spherical_convex_hull(std::span<const GeoPoint>(pts));
    benchmark::DoNotOptimize(h.vertices().data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ConvexHull)->RangeMultiplier(4)->Range(16, 16384);

void BM_HullContains(benchmark::State& state) {
  auto pts = cap_points(2000, 2);
  auto h = spherical_convex_hull(std::span<const GeoPoint>(pts));
  auto probes = cap_points(4096, 3);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(hull_contains(h, probes[i++ & 4095]));
  }
}
BENCHMARK(BM_HullContains);

const LoadedWorld& real_world() {
  static const LoadedWorld w = [] {
    const fs::path dir = fs::path(GEOEXPOSE_SOURCE_DIR) / "data" / "world";
    return load_world(dir / "cities.csv", dir / "borders.geojson", dir / "regions.csv");
  }();
  return w;
}

// A cold normal set on real borders: hull build plus a scan of every country.
void BM_NormalSetRealWorld(benchmark::State& state) {
  const auto mode = static_cast<HullMode>(state.range(0));
  const auto& world = real_world().world;
  for (auto _ : state) {
    auto ns = normal_set(world, CountryCode::of("CN"), CountryCode::of("MN"), mode);
    benchmark::DoNotOptimize(ns.countries.data());
  }
  state.SetLabel(std::string(to_string(mode)));
}
BENCHMARK(BM_NormalSetRealWorld)
    ->Arg(static_cast<int>(HullMode::population))
    ->Arg(static_cast<int>(HullMode::border))
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
