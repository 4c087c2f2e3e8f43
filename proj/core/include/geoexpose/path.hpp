#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "geoexpose/country.hpp"
#include "geoexpose/enrichment.hpp"
#include "geoexpose/ip.hpp"
#include "geoexpose/normality.hpp"

namespace geoexpose {

struct TracerouteHop {
  std::uint32_t ttl = 0;
  std::optional<IpAddress> ip;  // unset for an unresponsive router
  friend bool operator==(const TracerouteHop&, const TracerouteHop&) = default;
};

struct TracerouteRecord {
  IpAddress src_ip;
  IpAddress dst_ip;
  std::int64_t timestamp = 0;
  std::vector<TracerouteHop> hops;  // ttl strictly increasing
  friend bool operator==(const TracerouteRecord&, const TracerouteRecord&) = default;
};

/// Parses one JSON object: {"src_ip", "dst_ip", "timestamp", "hops": [{"ttl",
/// "ip"}]}. A hop ip of null, "*" or a missing key marks an unresponsive
/// hop. Unknown keys are ignored. Throws ParseError carrying `source` and
/// `line`; JSON syntax errors also name the column.
TracerouteRecord parse_traceroute(std::string_view text, const std::string& source = "<input>",
                                  std::size_t line = 0);

struct TupleHop {
  CountryCode phys_country;
  Asn asn;
  std::optional<CountryCode> legal_country;
  friend bool operator==(const TupleHop&, const TupleHop&) = default;
};

/// A traceroute reduced to the (country, AS) pairs it crossed.
struct TuplePath {
  CountryCode src_country;
  CountryCode dst_country;
  std::vector<TupleHop> hops;  // no two neighbours share (phys_country, asn)
  /// Hops discarded for lacking a country or an AS, unresponsive ones included.
  std::size_t dropped_hops = 0;
  std::size_t unresponsive_hops = 0;
  /// Hops that resolved before compression; dropped_hops + resolved_hops is
  /// the record's hop count.
  std::size_t resolved_hops = 0;
  friend bool operator==(const TuplePath&, const TuplePath&) = default;
};

enum class SkipReason { unresolved_source, unresolved_destination, empty_path, unclassifiable_pair };

inline constexpr std::array<SkipReason, 4> kAllSkipReasons = {
    SkipReason::unresolved_source, SkipReason::unresolved_destination, SkipReason::empty_path,
    SkipReason::unclassifiable_pair};

std::string_view to_string(SkipReason r) noexcept;

struct Skip {
  SkipReason reason;
  friend bool operator==(const Skip&, const Skip&) = default;
};

/// Collapses runs of hops with equal (phys_country, asn) to their first hop.
std::vector<TupleHop> compress_hops(std::span<const TupleHop> hops);

/// Endpoints are the geolocations of src_ip and dst_ip. A record without any
/// hops is skipped as empty_path; one whose hops all drop yields an empty
/// tuple path.
std::variant<TuplePath, Skip> to_tuple_path(const TracerouteRecord& rec, const Enrichment& enrichment);

struct PathClassification {
  PathVerdict physical;
  PathVerdict legal;
  PathVerdict union_;
  /// Legal transit countries absent from the physical transit set.
  std::size_t union_added_countries = 0;
  std::size_t tuple_len = 0;
  std::size_t as_count = 0;
  /// The endpoint pair had no hull; every verdict is non-normal.
  bool unclassifiable = false;

  const PathVerdict& verdict(Exposure e) const noexcept;
  friend bool operator==(const PathClassification&, const PathClassification&) = default;
};

/// Distinct countries of the path under one exposure, endpoints excluded.
std::vector<CountryCode> transit_countries(const TuplePath& tp, Exposure exposure);

/// All three verdicts are taken against the normal set of the physical
/// endpoints. Throws UnknownCountry when an endpoint has no world record.
PathClassification classify_path(const TuplePath& tp, PairCache& cache, HullMode mode);
PathClassification classify_path(const TuplePath& tp, const NormalSet& ns);

enum class UnclassifiablePolicy { exclude, count_non_normal };

std::string_view to_string(UnclassifiablePolicy p) noexcept;
std::optional<UnclassifiablePolicy> parse_unclassifiable_policy(std::string_view text) noexcept;

struct PipelineOptions {
  HullMode mode = HullMode::population;
  UnclassifiablePolicy unclassifiable = UnclassifiablePolicy::exclude;
};

struct ProcessedPath {
  TuplePath path;
  PathClassification classification;
};

/// Per-reason skip tallies.
class SkipLog {
 public:
  void add(SkipReason r, std::uint64_t n = 1) noexcept { counts_[static_cast<std::size_t>(r)] += n; }
  std::uint64_t count(SkipReason r) const noexcept { return counts_[static_cast<std::size_t>(r)]; }
  std::uint64_t total() const noexcept;
  SkipLog& merge(const SkipLog& other) noexcept;
  friend bool operator==(const SkipLog&, const SkipLog&) = default;

 private:
  std::array<std::uint64_t, kAllSkipReasons.size()> counts_{};
};

/// Endpoints geolocating to a country the world model does not know are
/// skipped as unresolved, as are border-mode endpoints without polygons
/// (unless both endpoints are the same country).
std::variant<ProcessedPath, Skip> process_record(const TracerouteRecord& rec,
                                                 const Enrichment& enrichment, PairCache& cache,
                                                 const PipelineOptions& options);

/// Serial form of the pipeline; output follows input order.
std::vector<ProcessedPath> process_stream(std::span<const TracerouteRecord> records,
                                          const Enrichment& enrichment, PairCache& cache,
                                          const PipelineOptions& options, SkipLog& skips);

}  // namespace geoexpose
