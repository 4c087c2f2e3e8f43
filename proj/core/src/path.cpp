#include "geoexpose/path.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "geoexpose/error.hpp"

namespace geoexpose {

namespace {

using json = nlohmann::json;

IpAddress address_field(const json& obj, const char* key, const std::string& source,
                        std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw ParseError(source, line, std::string("field '") + key + "' must be an address string");
  }
  auto ip = IpAddress::parse(it->get_ref<const std::string&>());
  if (!ip) {
    throw ParseError(source, line,
                     std::string("field '") + key + "': invalid address '" +
                         it->get<std::string>() + "'");
  }
  return *ip;
}

std::int64_t integer_field(const json& v, const char* what, const std::string& source,
                           std::size_t line) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) {
    double d = v.get<double>();
    if (std::isfinite(d) && d == std::floor(d) && std::abs(d) < 9.0e15) {
      return static_cast<std::int64_t>(d);
    }
  }
  throw ParseError(source, line, std::string(what) + " must be an integer");
}

}  // namespace

TracerouteRecord parse_traceroute(std::string_view text, const std::string& source,
                                  std::size_t line) {
  json obj;
  try {
    obj = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(source, line,
                     "column " + std::to_string(e.byte) + ": malformed JSON record");
  }
  if (!obj.is_object()) throw ParseError(source, line, "record must be a JSON object");

  TracerouteRecord rec;
  rec.src_ip = address_field(obj, "src_ip", source, line);
  rec.dst_ip = address_field(obj, "dst_ip", source, line);
  auto ts = obj.find("timestamp");
  if (ts == obj.end()) throw ParseError(source, line, "missing field 'timestamp'");
  rec.timestamp = integer_field(*ts, "timestamp", source, line);

  auto hops = obj.find("hops");
  if (hops == obj.end() || !hops->is_array()) {
    throw ParseError(source, line, "field 'hops' must be an array");
  }
  rec.hops.reserve(hops->size());
  for (const auto& h : *hops) {
    if (!h.is_object()) throw ParseError(source, line, "each hop must be an object");
    auto ttl_it = h.find("ttl");
    if (ttl_it == h.end()) throw ParseError(source, line, "hop without 'ttl'");
    std::int64_t ttl = integer_field(*ttl_it, "ttl", source, line);
    if (ttl < 1 || ttl > 0xFFFF) {
      throw ParseError(source, line, "ttl " + std::to_string(ttl) + " out of range");
    }
    TracerouteHop hop{static_cast<std::uint32_t>(ttl), std::nullopt};
    if (!rec.hops.empty() && hop.ttl <= rec.hops.back().ttl) {
      throw ParseError(source, line, "ttl must be strictly increasing (" +
                                         std::to_string(rec.hops.back().ttl) + " then " +
                                         std::to_string(hop.ttl) + ")");
    }
    if (auto ip = h.find("ip"); ip != h.end() && !ip->is_null()) {
      if (!ip->is_string()) throw ParseError(source, line, "hop 'ip' must be a string or null");
      const auto& s = ip->get_ref<const std::string&>();
      if (s != "*") {
        hop.ip = IpAddress::parse(s);
        if (!hop.ip) throw ParseError(source, line, "hop has invalid address '" + s + "'");
      }
    }
    rec.hops.push_back(hop);
  }
  return rec;
}

std::string_view to_string(SkipReason r) noexcept {
  switch (r) {
    case SkipReason::unresolved_source: return "unresolved_source";
    case SkipReason::unresolved_destination: return "unresolved_destination";
    case SkipReason::empty_path: return "empty_path";
    case SkipReason::unclassifiable_pair: return "unclassifiable_pair";
  }
  return "unknown";
}

std::vector<TupleHop> compress_hops(std::span<const TupleHop> hops) {
  std::vector<TupleHop> out;
  out.reserve(hops.size());
  for (const auto& h : hops) {
    if (!out.empty() && out.back().phys_country == h.phys_country && out.back().asn == h.asn) {
      continue;
    }
    out.push_back(h);
  }
  return out;
}

std::variant<TuplePath, Skip> to_tuple_path(const TracerouteRecord& rec,
                                            const Enrichment& enrichment) {
  auto src = enrichment.locate(rec.src_ip);
  if (!src) return Skip{SkipReason::unresolved_source};
  auto dst = enrichment.locate(rec.dst_ip);
  if (!dst) return Skip{SkipReason::unresolved_destination};
  if (rec.hops.empty()) return Skip{SkipReason::empty_path};

  TuplePath tp{*src, *dst, {}, 0, 0, 0};
  std::vector<TupleHop> resolved;
  resolved.reserve(rec.hops.size());
  for (const auto& hop : rec.hops) {
    if (!hop.ip) {
      ++tp.unresponsive_hops;
      ++tp.dropped_hops;
      continue;
    }
    HopResolution r = enrichment.resolve(*hop.ip, rec.timestamp);
    if (!r.phys_country || !r.asn) {
      ++tp.dropped_hops;
      continue;
    }
    resolved.push_back({*r.phys_country, *r.asn, r.legal_country});
  }
  tp.resolved_hops = resolved.size();
  tp.hops = compress_hops(resolved);
  return tp;
}

const PathVerdict& PathClassification::verdict(Exposure e) const noexcept {
  switch (e) {
    case Exposure::physical: return physical;
    case Exposure::legal: return legal;
    case Exposure::union_: return union_;
  }
  return physical;
}

namespace {

std::vector<CountryCode> exposure_countries(const TuplePath& tp, Exposure exposure) {
  std::vector<CountryCode> out;
  for (const auto& h : tp.hops) {
    if (exposure != Exposure::legal) out.push_back(h.phys_country);
    if (exposure != Exposure::physical && h.legal_country) out.push_back(*h.legal_country);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

std::vector<CountryCode> transit_countries(const TuplePath& tp, Exposure exposure) {
  auto all = exposure_countries(tp, exposure);
  std::erase_if(all, [&](CountryCode c) { return c == tp.src_country || c == tp.dst_country; });
  return all;
}

PathClassification classify_path(const TuplePath& tp, const NormalSet& ns) {
  PathClassification pc;
  pc.physical = classify(ns, exposure_countries(tp, Exposure::physical));
  pc.legal = classify(ns, exposure_countries(tp, Exposure::legal));
  pc.union_ = classify(ns, exposure_countries(tp, Exposure::union_));
  auto phys = transit_countries(tp, Exposure::physical);
  auto uni = transit_countries(tp, Exposure::union_);
  std::vector<CountryCode> added;
  std::set_difference(uni.begin(), uni.end(), phys.begin(), phys.end(), std::back_inserter(added));
  pc.union_added_countries = added.size();
  pc.tuple_len = tp.hops.size();
  std::set<Asn> asns;
  for (const auto& h : tp.hops) asns.insert(h.asn);
  pc.as_count = asns.size();
  pc.unclassifiable = ns.unclassifiable;
  return pc;
}

PathClassification classify_path(const TuplePath& tp, PairCache& cache, HullMode mode) {
  return classify_path(tp, cache.get_or_build(tp.src_country, tp.dst_country, mode));
}

std::string_view to_string(UnclassifiablePolicy p) noexcept {
  return p == UnclassifiablePolicy::exclude ? "exclude" : "count_non_normal";
}

std::optional<UnclassifiablePolicy> parse_unclassifiable_policy(std::string_view text) noexcept {
  if (text == "exclude") return UnclassifiablePolicy::exclude;
  if (text == "count_non_normal" || text == "count-non-normal") {
    return UnclassifiablePolicy::count_non_normal;
  }
  return std::nullopt;
}

std::uint64_t SkipLog::total() const noexcept {
  std::uint64_t sum = 0;
  for (auto c : counts_) sum += c;
  return sum;
}

SkipLog& SkipLog::merge(const SkipLog& other) noexcept {
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

std::variant<ProcessedPath, Skip> process_record(const TracerouteRecord& rec,
                                                 const Enrichment& enrichment, PairCache& cache,
                                                 const PipelineOptions& options) {
  auto tuple = to_tuple_path(rec, enrichment);
  if (auto* skip = std::get_if<Skip>(&tuple)) return *skip;
  auto& tp = std::get<TuplePath>(tuple);
  const WorldModel& world = cache.world();
  // A border hull between two countries needs polygons for both; a
  // same-country pair needs no geometry at all.
  const bool needs_borders = options.mode == HullMode::border && tp.src_country != tp.dst_country;
  auto anchored = [&](CountryCode c) {
    return world.has_record(c) && (!needs_borders || world.borders().count(c) > 0);
  };
  if (!anchored(tp.src_country)) return Skip{SkipReason::unresolved_source};
  if (!anchored(tp.dst_country)) return Skip{SkipReason::unresolved_destination};

  NormalSet ns = cache.get_or_build(tp.src_country, tp.dst_country, options.mode);
  if (ns.unclassifiable && options.unclassifiable == UnclassifiablePolicy::exclude) {
    return Skip{SkipReason::unclassifiable_pair};
  }
  PathClassification pc = classify_path(tp, ns);
  return ProcessedPath{std::move(tp), std::move(pc)};
}

std::vector<ProcessedPath> process_stream(std::span<const TracerouteRecord> records,
                                          const Enrichment& enrichment, PairCache& cache,
                                          const PipelineOptions& options, SkipLog& skips) {
  std::vector<ProcessedPath> out;
  for (const auto& rec : records) {
    auto result = process_record(rec, enrichment, cache, options);
    if (auto* skip = std::get_if<Skip>(&result)) {
      skips.add(skip->reason);
    } else {
      out.push_back(std::move(std::get<ProcessedPath>(result)));
    }
  }
  return out;
}

}  // namespace geoexpose
