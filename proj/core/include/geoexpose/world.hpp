#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geoexpose/country.hpp"
#include "geoexpose/sphere.hpp"

namespace geoexpose {

struct City {
  std::string name;
  GeoPoint location;
  std::uint64_t population = 0;
};

struct CountryRecord {
  CountryCode iso2;
  std::string name;
  Region region = Region::africa;
  std::vector<City> cities;  // descending population
};

struct CountryBorders {
  CountryCode iso2;
  std::vector<GeoPolygon> polygons;
};

struct WorldOptions {
  /// Hull input size in population mode; countries with fewer cities use all.
  std::size_t cities_per_country = 15;
};

/// Immutable registry of countries, their top cities, borders and regions.
class WorldModel {
 public:
  struct Borders {
    CountryBorders raw;
    std::vector<PreparedPolygon> prepared;
  };

  /// Validates and indexes the inputs. Cities are sorted by descending
  /// population (stable). Throws ValidationError on duplicate codes, a
  /// record without cities or an invalid polygon.
  ///
  /// `regions` may assign regions to borders-only countries; for countries
  /// with a record it must agree with the record's region.
  WorldModel(std::vector<CountryRecord> records, std::vector<CountryBorders> borders,
             std::map<CountryCode, Region> regions = {}, WorldOptions options = {});

  const std::map<CountryCode, CountryRecord>& countries() const noexcept { return records_; }
  const std::map<CountryCode, Borders>& borders() const noexcept { return borders_; }
  const WorldOptions& options() const noexcept { return options_; }

  const CountryRecord* find(CountryCode code) const noexcept;
  /// Throws UnknownCountry when `code` has no record.
  const CountryRecord& country(CountryCode code) const;
  bool has_record(CountryCode code) const noexcept { return records_.count(code) != 0; }
  bool has_borders(CountryCode code) const noexcept { return borders_.count(code) != 0; }

  std::optional<Region> region_of(CountryCode code) const noexcept;

  /// The min(k, available) most populous cities.
  std::span<const City> top_cities(CountryCode code) const;

  /// True when `p` lies in any of the country's polygons.
  bool in_borders(CountryCode code, const UnitVec3& p) const noexcept;

  /// Top cities that fall outside every polygon of their own country.
  std::vector<std::string> consistency_warnings() const;

 private:
  std::map<CountryCode, CountryRecord> records_;
  std::map<CountryCode, Borders> borders_;
  std::map<CountryCode, Region> regions_;
  WorldOptions options_;
};

/// What load_world() noticed about coverage gaps between its three inputs.
struct LoadSummary {
  std::size_t city_rows = 0;
  std::vector<CountryCode> borders_only;     // kept: partial-containment candidates only
  std::vector<CountryCode> without_borders;  // kept: unusable in border mode
  std::vector<CountryCode> without_region;   // cities present but no region row; excluded
  std::vector<CountryCode> region_only;      // region row with no cities and no borders
  std::vector<std::string> warnings;
};

struct LoadedWorld {
  WorldModel world;
  LoadSummary summary;
};

/// Reads the cities CSV (iso2,city,lat,lon,population; header required), the
/// borders GeoJSON (features carry an `iso2` property) and the regions CSV
/// (iso2,region). Throws ParseError or ValidationError.
LoadedWorld load_world(const std::filesystem::path& cities_file,
                       const std::filesystem::path& borders_file,
                       const std::filesystem::path& regions_file, WorldOptions options = {});

std::vector<CountryBorders> load_borders(const std::filesystem::path& borders_file,
                                         std::map<CountryCode, std::string>* names = nullptr,
                                         std::vector<std::string>* warnings = nullptr);

/// Hull input points for one country: top-k city locations in population
/// mode, every ring vertex of every polygon in border mode. Throws
/// UnknownCountry when the country (or, in border mode, its borders) is absent.
std::vector<GeoPoint> country_points(const WorldModel& world, CountryCode code, HullMode mode);

}  // namespace geoexpose
