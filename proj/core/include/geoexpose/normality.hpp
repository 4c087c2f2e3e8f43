#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <shared_mutex>
#include <span>
#include <vector>

#include "geoexpose/country.hpp"
#include "geoexpose/sphere.hpp"
#include "geoexpose/world.hpp"

namespace geoexpose {

/// Countries considered geographically normal between src and dst.
struct NormalSet {
  CountryCode src;
  CountryCode dst;
  HullMode mode = HullMode::population;
  std::vector<CountryCode> countries;  // sorted, unique; always holds src and dst
  /// The pair's points span more than a hemisphere; no hull was built.
  bool unclassifiable = false;

  bool contains(CountryCode c) const noexcept;
  friend bool operator==(const NormalSet&, const NormalSet&) = default;
};

struct PathVerdict {
  bool normal = true;
  std::vector<CountryCode> benefactors;  // sorted, unique
  friend bool operator==(const PathVerdict&, const PathVerdict&) = default;
};

struct NormalityOptions {
  /// Spacing of hull-edge samples tested against country borders.
  double boundary_step_deg = kDefaultBoundaryStepDeg;
};

/// The hull spanned by both countries' points. Input is ordered canonically,
/// so (a, b) and (b, a) give the same hull. Throws UnknownCountry or
/// HemisphereViolation.
SphericalHull pair_hull(const WorldModel& world, CountryCode a, CountryCode b, HullMode mode);

/// A country is normal if one of its top cities is inside the pair hull, or
/// if a sample along the hull's edge falls inside its borders. src == dst
/// yields {src} without building a hull. Throws UnknownCountry.
NormalSet normal_set(const WorldModel& world, CountryCode src, CountryCode dst, HullMode mode,
                     const NormalityOptions& options = {});

/// Benefactors are the path's countries outside the normal set, never src or
/// dst. For unclassifiable sets every non-endpoint country is a benefactor
/// and the verdict is non-normal regardless.
PathVerdict classify(const NormalSet& ns, std::span<const CountryCode> path_countries);

struct CacheStats {
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;  // distinct (unordered pair, mode) keys inserted
  std::uint64_t builds = 0;  // hull constructions, including concurrent duplicates
};

/// Memoizes normal_set() per unordered country pair and mode. Lookups take a
/// shared lock; a miss builds outside the lock and inserts under an exclusive
/// one, so two threads may race to build the same pair.
class PairCache {
 public:
  explicit PairCache(const WorldModel& world, NormalityOptions options = {});

  PairCache(const PairCache&) = delete;
  PairCache& operator=(const PairCache&) = delete;

  NormalSet get_or_build(CountryCode src, CountryCode dst, HullMode mode);
  CacheStats stats() const noexcept;
  const WorldModel& world() const noexcept { return *world_; }
  const NormalityOptions& options() const noexcept { return options_; }

 private:
  struct Key {
    CountryCode lo, hi;
    HullMode mode;
    friend auto operator<=>(const Key&, const Key&) = default;
  };

  const WorldModel* world_;
  NormalityOptions options_;
  mutable std::shared_mutex mutex_;
  std::map<Key, NormalSet> entries_;
  std::atomic<std::uint64_t> hits_{0};
  std::atomic<std::uint64_t> misses_{0};
  std::atomic<std::uint64_t> builds_{0};
};

/// Free-function form of PairCache::get_or_build. `world` must be the model
/// the cache was created with; throws std::invalid_argument otherwise.
NormalSet pair_cache_get_or_build(PairCache& cache, const WorldModel& world, CountryCode src,
                                  CountryCode dst, HullMode mode);

}  // namespace geoexpose
