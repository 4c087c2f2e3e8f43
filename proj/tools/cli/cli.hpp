#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "geoexpose/country.hpp"
#include "geoexpose/enrichment.hpp"
#include "geoexpose/path.hpp"
#include "geoexpose/sphere.hpp"

namespace geoexpose::cli {

/// Origin table with an optional start date ("table.csv@2015-03-01").
struct OriginTableArg {
  std::filesystem::path file;
  std::int64_t valid_from = OriginSnapshots::kAlways;
};

/// Throws ValidationError for a malformed date suffix.
OriginTableArg parse_origin_table_arg(const std::string& text);

/// Every setting of a run. Settings that change results are echoed into the
/// report header.
struct RunConfig {
  std::filesystem::path cities, borders, regions;
  std::filesystem::path geo_table, as_registry, traceroutes;
  std::vector<std::string> origin_tables;
  HullMode mode = HullMode::population;
  double boundary_step = kDefaultBoundaryStepDeg;
  unsigned workers = 1;
  UnclassifiablePolicy unclassifiable = UnclassifiablePolicy::exclude;
  std::size_t top_n = 10;
  std::size_t cities_per_country = 15;
  MoasPolicy moas = MoasPolicy::error;
  std::filesystem::path output_dir = "geoexpose-report";

  /// Throws ValidationError unless workers >= 1, boundary_step > 0,
  /// top_n >= 1 and cities_per_country >= 1.
  void validate() const;
};

/// Up to `limit` known codes closest to `code`, for error messages.
std::vector<CountryCode> suggest_codes(std::string_view code,
                                       const std::vector<CountryCode>& known, std::size_t limit = 5);

/// Entry point of the geoexpose executable. Returns the exit status: 0 on
/// success, 1 when a run fails, 2 for usage errors.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace geoexpose::cli
