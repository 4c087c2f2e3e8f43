#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "geoexpose/country.hpp"
#include "geoexpose/ip.hpp"
#include "geoexpose/prefix_table.hpp"

namespace geoexpose {

using GeoTable = PrefixTable<CountryCode>;
using OriginTable = PrefixTable<Asn>;

/// Origin AS number to the country it is registered in.
class AsRegistry {
 public:
  /// Throws ValidationError for AS 0 and ConflictError when `asn` is already
  /// registered to another country.
  void insert(Asn asn, CountryCode country);
  std::optional<CountryCode> find(Asn asn) const noexcept;
  std::size_t size() const noexcept { return map_.size(); }
  const std::map<Asn, CountryCode>& entries() const noexcept { return map_; }

 private:
  std::map<Asn, CountryCode> map_;
};

/// Origin tables keyed by the first second each is valid for. A traceroute
/// uses the latest table that starts at or before its timestamp, or the
/// earliest table when it predates them all.
class OriginSnapshots {
 public:
  static constexpr std::int64_t kAlways = std::numeric_limits<std::int64_t>::min();

  OriginSnapshots() = default;
  explicit OriginSnapshots(OriginTable single) { add(kAlways, std::move(single)); }

  /// Throws ValidationError when a snapshot already starts at `valid_from`.
  void add(std::int64_t valid_from, OriginTable table);
  /// Null only when there are no snapshots.
  const OriginTable* select(std::int64_t timestamp) const noexcept;
  std::size_t size() const noexcept { return tables_.size(); }

 private:
  std::map<std::int64_t, OriginTable> tables_;
};

struct HopResolution {
  IpAddress ip;
  std::optional<CountryCode> phys_country;
  std::optional<Asn> asn;
  std::optional<CountryCode> legal_country;  // unset whenever asn is unset

  friend bool operator==(const HopResolution&, const HopResolution&) = default;
};

/// Reserved addresses resolve to all-unknown without consulting any table.
HopResolution resolve_hop(const GeoTable& geo, const OriginTable* origin,
                          const AsRegistry& registry, const IpAddress& ip);
inline HopResolution resolve_hop(const GeoTable& geo, const OriginTable& origin,
                                 const AsRegistry& registry, const IpAddress& ip) {
  return resolve_hop(geo, &origin, registry, ip);
}

/// The three lookup tables, immutable once built.
struct Enrichment {
  GeoTable geo;
  OriginSnapshots origins;
  AsRegistry registry;

  /// Physical country of an address; reserved ranges never locate.
  std::optional<CountryCode> locate(const IpAddress& ip) const;
  HopResolution resolve(const IpAddress& ip, std::int64_t timestamp) const;
};

/// What to do with an origin-table prefix announced by several ASes.
enum class MoasPolicy { error, first_wins };

/// Loaders for two-column comma-separated files: `cidr,iso2`, `cidr,asn` and
/// `asn,iso2`. An optional header row is recognized by a purely alphabetic
/// first field. AS numbers may carry an "AS" prefix. Repeated identical rows
/// are accepted. Throw ParseError (with file and line) or ConflictError
/// (naming the prefix or AS).
GeoTable load_geo_table(const std::filesystem::path& file);
OriginTable load_origin_table(const std::filesystem::path& file,
                              MoasPolicy moas = MoasPolicy::error);
AsRegistry load_as_registry(const std::filesystem::path& file);

/// "AS64500" or "64500"; rejects 0 and values above 2^32 - 1.
std::optional<Asn> parse_asn(std::string_view text) noexcept;

/// "YYYY-MM-DD" to seconds since the epoch at 00:00 UTC.
std::optional<std::int64_t> parse_utc_date(std::string_view text) noexcept;

}  // namespace geoexpose
