#include "geoexpose/normality.hpp"

#include <algorithm>
#include <mutex>
#include <set>
#include <stdexcept>

namespace geoexpose {

bool NormalSet::contains(CountryCode c) const noexcept {
  return std::binary_search(countries.begin(), countries.end(), c);
}

SphericalHull pair_hull(const WorldModel& world, CountryCode a, CountryCode b, HullMode mode) {
  if (b < a) std::swap(a, b);
  auto points = country_points(world, a, mode);
  if (a != b) {
    auto more = country_points(world, b, mode);
    points.insert(points.end(), more.begin(), more.end());
  }
  return spherical_convex_hull(std::span<const GeoPoint>(points));
}

NormalSet normal_set(const WorldModel& world, CountryCode src, CountryCode dst, HullMode mode,
                     const NormalityOptions& options) {
  world.country(src);
  world.country(dst);

  NormalSet ns{src, dst, mode, {}, false};
  if (src == dst) {
    ns.countries = {src};
    return ns;
  }

  std::set<CountryCode> members{src, dst};
  SphericalHull hull;
  try {
    hull = pair_hull(world, src, dst, mode);
  } catch (const HemisphereViolation&) {
    ns.unclassifiable = true;
    ns.countries.assign(members.begin(), members.end());
    return ns;
  }

  for (const auto& [code, rec] : world.countries()) {
    if (members.count(code)) continue;
    for (const auto& city : world.top_cities(code)) {
      if (hull.contains(city.location)) {
        members.insert(code);
        break;
      }
    }
  }

  const auto samples = hull_boundary_points(hull, options.boundary_step_deg);
  for (const auto& [code, borders] : world.borders()) {
    if (members.count(code)) continue;
    bool hit = false;
    for (const auto& poly : borders.prepared) {
      double gap = angle_between(poly.cap_center(), hull.centroid());
      if (gap > poly.cap_radius() + hull.radius() + kContainmentTolerance) continue;
      hit = std::any_of(samples.begin(), samples.end(),
                        [&](const UnitVec3& s) { return poly.contains(s); });
      if (hit) break;
    }
    if (hit) members.insert(code);
  }

  ns.countries.assign(members.begin(), members.end());
  return ns;
}

PathVerdict classify(const NormalSet& ns, std::span<const CountryCode> path_countries) {
  std::set<CountryCode> seen(path_countries.begin(), path_countries.end());
  PathVerdict verdict;
  for (const auto& c : seen) {
    if (c == ns.src || c == ns.dst) continue;
    if (ns.unclassifiable || !ns.contains(c)) verdict.benefactors.push_back(c);
  }
  verdict.normal = !ns.unclassifiable && verdict.benefactors.empty();
  return verdict;
}

PairCache::PairCache(const WorldModel& world, NormalityOptions options)
    : world_(&world), options_(options) {}

NormalSet PairCache::get_or_build(CountryCode src, CountryCode dst, HullMode mode) {
  Key key{std::min(src, dst), std::max(src, dst), mode};
  auto view = [&](NormalSet ns) {
    ns.src = src;
    ns.dst = dst;
    return ns;
  };
  {
    std::shared_lock lock(mutex_);
    if (auto it = entries_.find(key); it != entries_.end()) {
      hits_.fetch_add(1, std::memory_order_relaxed);
      return view(it->second);
    }
  }
  NormalSet built = normal_set(*world_, key.lo, key.hi, mode, options_);
  builds_.fetch_add(1, std::memory_order_relaxed);
  std::unique_lock lock(mutex_);
  auto [it, inserted] = entries_.emplace(key, std::move(built));
  if (inserted) {
    misses_.fetch_add(1, std::memory_order_relaxed);
  } else {
    hits_.fetch_add(1, std::memory_order_relaxed);
  }
  return view(it->second);
}

CacheStats PairCache::stats() const noexcept {
  return {hits_.load(std::memory_order_relaxed), misses_.load(std::memory_order_relaxed),
          builds_.load(std::memory_order_relaxed)};
}

NormalSet pair_cache_get_or_build(PairCache& cache, const WorldModel& world, CountryCode src,
                                  CountryCode dst, HullMode mode) {
  if (&cache.world() != &world) {
    throw std::invalid_argument("pair cache was built over a different world model");
  }
  return cache.get_or_build(src, dst, mode);
}

}  // namespace geoexpose
