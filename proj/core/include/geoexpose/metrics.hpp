#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "geoexpose/country.hpp"
#include "geoexpose/path.hpp"
#include "geoexpose/world.hpp"

namespace geoexpose {

/// Normal paths out of total paths.
struct Tally {
  std::uint64_t normal = 0;
  std::uint64_t total = 0;

  void add(bool is_normal) noexcept {
    ++total;
    normal += is_normal ? 1 : 0;
  }
  Tally& operator+=(const Tally& o) noexcept {
    normal += o.normal;
    total += o.total;
    return *this;
  }
  friend bool operator==(const Tally&, const Tally&) = default;
};

/// Degree of normality: normal / total, absent for an empty denominator.
std::optional<double> don(std::uint64_t normal, std::uint64_t total) noexcept;
inline std::optional<double> don(const Tally& t) noexcept { return don(t.normal, t.total); }

enum class Role { source, transit, destination };
inline constexpr std::array<Role, 3> kAllRoles = {Role::source, Role::transit, Role::destination};
std::string_view to_string(Role r) noexcept;

inline std::size_t index_of(Exposure e) noexcept { return static_cast<std::size_t>(e); }
inline std::size_t index_of(Role r) noexcept { return static_cast<std::size_t>(r); }
inline std::size_t index_of(Region r) noexcept { return static_cast<std::size_t>(r); }

/// Per country, role and exposure. A country counts at most once per path
/// and role; src and dst never count as transit.
class RoleCounters {
 public:
  using Cell = std::array<std::array<Tally, 3>, 3>;  // [role][exposure]

  void add(CountryCode c, Role r, Exposure e, bool normal) {
    cells_[c][index_of(r)][index_of(e)].add(normal);
  }
  Tally get(CountryCode c, Role r, Exposure e) const noexcept;
  const std::map<CountryCode, Cell>& cells() const noexcept { return cells_; }
  RoleCounters& merge(const RoleCounters& o);
  friend bool operator==(const RoleCounters&, const RoleCounters&) = default;

 private:
  std::map<CountryCode, Cell> cells_;
};

struct BenefactorTally {
  std::uint64_t benefited_paths = 0;      // paths where the country is a benefactor
  std::uint64_t transited_paths = 0;      // paths where the country appears at all
  std::uint64_t transit_only_paths = 0;   // paths where it appears but is not an endpoint
  std::uint64_t transit_only_normal = 0;  // of those, paths with a normal verdict

  BenefactorTally& operator+=(const BenefactorTally& o) noexcept;
  friend bool operator==(const BenefactorTally&, const BenefactorTally&) = default;
};

class BenefactorCounters {
 public:
  using Cell = std::array<BenefactorTally, 3>;  // [exposure]

  BenefactorTally& at(CountryCode c, Exposure e) { return cells_[c][index_of(e)]; }
  BenefactorTally get(CountryCode c, Exposure e) const noexcept;
  const std::map<CountryCode, Cell>& cells() const noexcept { return cells_; }
  BenefactorCounters& merge(const BenefactorCounters& o);
  friend bool operator==(const BenefactorCounters&, const BenefactorCounters&) = default;

 private:
  std::map<CountryCode, Cell> cells_;
};

/// Path-shape histograms, all over physical verdicts except union_added.
struct Histograms {
  std::map<std::size_t, std::uint64_t> severity;  // physical benefactor count -> paths
  std::map<std::size_t, Tally> tuple_len_don;     // compressed hop count -> DoN tally
  std::map<std::size_t, Tally> as_count_don;      // distinct ASes -> DoN tally
  std::map<std::size_t, std::uint64_t> union_added;

  Histograms& merge(const Histograms& o);
  friend bool operator==(const Histograms&, const Histograms&) = default;
};

/// [src_region][dst_region][exposure].
struct RegionMatrix {
  std::array<std::array<std::array<Tally, 3>, 5>, 5> cells{};

  Tally& at(Region src, Region dst, Exposure e) noexcept {
    return cells[index_of(src)][index_of(dst)][index_of(e)];
  }
  const Tally& at(Region src, Region dst, Exposure e) const noexcept {
    return cells[index_of(src)][index_of(dst)][index_of(e)];
  }
  RegionMatrix& merge(const RegionMatrix& o) noexcept;
  friend bool operator==(const RegionMatrix&, const RegionMatrix&) = default;
};

/// Everything the report is computed from. Merging is associative and
/// commutative with Aggregate{} as identity, so workers can each fill one
/// and combine them in any order.
struct Aggregate {
  std::array<Tally, 3> global{};  // [exposure]
  std::uint64_t unclassifiable_paths = 0;
  RoleCounters roles;
  BenefactorCounters benefactors;
  Histograms histograms;
  RegionMatrix regions;
  /// [region][role][exposure], each region counted at most once per path and role.
  std::array<std::array<std::array<Tally, 3>, 3>, 5> region_roles{};
  SkipLog skips;

  std::uint64_t paths() const noexcept { return global[0].total; }
  Aggregate& merge(const Aggregate& o);
  friend bool operator==(const Aggregate&, const Aggregate&) = default;
};

/// Folds one classified path into `agg`. Throws UnknownCountry when an
/// endpoint has no region in `world`.
void accumulate(Aggregate& agg, const TuplePath& tp, const PathClassification& pc,
                const WorldModel& world);

/// One input file echoed into the report header.
struct InputDigest {
  std::string role;
  std::string file;    // base name only
  std::string sha256;  // lowercase hex
};

struct ReportHeader {
  std::vector<InputDigest> inputs;
  /// Run settings that affect results, as key/value pairs.
  std::map<std::string, std::string> config;
};

/// The report as a JSON document with sorted keys. Countries appear in iso2
/// order; top-N tables rank by count, ties broken by iso2.
std::string report_json(const Aggregate& agg, const WorldModel& world, const ReportHeader& header,
                        std::size_t top_n);

/// Writes report.json, the per-table CSVs and the two-column plot exports.
/// Files are staged in a scratch directory and renamed into place, so a
/// failed run leaves no partial report under `dir`. Returns the written paths.
std::vector<std::filesystem::path> write_report(const std::filesystem::path& dir,
                                                const Aggregate& agg, const WorldModel& world,
                                                const ReportHeader& header, std::size_t top_n);

/// Lowercase hex SHA-256 of a file's bytes. Throws ParseError if unreadable.
std::string sha256_file(const std::filesystem::path& file);

}  // namespace geoexpose
