#include "geoexpose/enrichment.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>

#include "csv.hpp"
#include "geoexpose/error.hpp"

namespace geoexpose {

void AsRegistry::insert(Asn asn, CountryCode country) {
  if (asn.value == 0) throw ValidationError("AS number must be positive");
  auto [it, inserted] = map_.try_emplace(asn, country);
  if (!inserted && it->second != country) {
    std::string key = "AS" + std::to_string(asn.value);
    throw ConflictError(key, key + " registered to both " + it->second.str() + " and " +
                                 country.str());
  }
}

std::optional<CountryCode> AsRegistry::find(Asn asn) const noexcept {
  auto it = map_.find(asn);
  if (it == map_.end()) return std::nullopt;
  return it->second;
}

void OriginSnapshots::add(std::int64_t valid_from, OriginTable table) {
  if (!tables_.try_emplace(valid_from, std::move(table)).second) {
    throw ValidationError("two origin tables share a start date");
  }
}

const OriginTable* OriginSnapshots::select(std::int64_t timestamp) const noexcept {
  if (tables_.empty()) return nullptr;
  auto it = tables_.upper_bound(timestamp);
  if (it == tables_.begin()) return &it->second;
  return &std::prev(it)->second;
}

HopResolution resolve_hop(const GeoTable& geo, const OriginTable* origin,
                          const AsRegistry& registry, const IpAddress& ip) {
  HopResolution r{ip, std::nullopt, std::nullopt, std::nullopt};
  if (is_special_purpose(ip)) return r;
  r.phys_country = geo.lookup(ip);
  if (origin) r.asn = origin->lookup(ip);
  if (r.asn) r.legal_country = registry.find(*r.asn);
  return r;
}

std::optional<CountryCode> Enrichment::locate(const IpAddress& ip) const {
  if (is_special_purpose(ip)) return std::nullopt;
  return geo.lookup(ip);
}

HopResolution Enrichment::resolve(const IpAddress& ip, std::int64_t timestamp) const {
  return resolve_hop(geo, origins.select(timestamp), registry, ip);
}

std::optional<Asn> parse_asn(std::string_view text) noexcept {
  if (text.size() > 2 && (text[0] == 'A' || text[0] == 'a') && (text[1] == 'S' || text[1] == 's')) {
    text.remove_prefix(2);
  }
  auto v = detail::parse_number<std::uint64_t>(text);
  if (!v || *v == 0 || *v > 0xFFFFFFFFull) return std::nullopt;
  return Asn{static_cast<std::uint32_t>(*v)};
}

std::optional<std::int64_t> parse_utc_date(std::string_view text) noexcept {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  auto y = detail::parse_number<int>(text.substr(0, 4));
  auto m = detail::parse_number<unsigned>(text.substr(5, 2));
  auto d = detail::parse_number<unsigned>(text.substr(8, 2));
  if (!y || !m || !d) return std::nullopt;
  std::chrono::year_month_day ymd{std::chrono::year{*y}, std::chrono::month{*m},
                                  std::chrono::day{*d}};
  if (!ymd.ok()) return std::nullopt;
  return std::chrono::sys_days{ymd}.time_since_epoch() / std::chrono::seconds{1};
}

namespace {

bool is_header(const detail::CsvRow& row) {
  const auto& f = row.fields.front();
  return !f.empty() &&
         std::all_of(f.begin(), f.end(), [](unsigned char c) { return std::isalpha(c) || c == '_'; });
}

/// Yields data rows with exactly two fields, skipping a leading header.
template <typename Fn>
void for_each_pair(const std::filesystem::path& file, Fn&& fn) {
  detail::CsvReader reader(file.string());
  bool first = true;
  while (auto row = reader.next()) {
    if (std::exchange(first, false) && is_header(*row)) continue;
    if (row->fields.size() != 2) {
      reader.fail(*row, "expected 2 fields, got " + std::to_string(row->fields.size()));
    }
    fn(reader, *row);
  }
}

IpPrefix prefix_field(const detail::CsvReader& reader, const detail::CsvRow& row) {
  auto prefix = IpPrefix::parse(row.fields[0]);
  if (!prefix) {
    reader.fail(row, "invalid prefix '" + row.fields[0] + "' (host bits must be zero)");
  }
  return *prefix;
}

}  // namespace

GeoTable load_geo_table(const std::filesystem::path& file) {
  GeoTable table;
  for_each_pair(file, [&](const detail::CsvReader& reader, const detail::CsvRow& row) {
    IpPrefix prefix = prefix_field(reader, row);
    auto code = CountryCode::parse(row.fields[1]);
    if (!code) reader.fail(row, "invalid country code '" + row.fields[1] + "'");
    if (table.insert(prefix, *code) == GeoTable::InsertResult::conflict) {
      throw ConflictError(prefix.str(), reader.path() + ":" + std::to_string(row.line) + ": " +
                                            prefix.str() + " geolocated to both " +
                                            table.find_exact(prefix)->str() + " and " +
                                            code->str());
    }
  });
  return table;
}

OriginTable load_origin_table(const std::filesystem::path& file, MoasPolicy moas) {
  OriginTable table;
  for_each_pair(file, [&](const detail::CsvReader& reader, const detail::CsvRow& row) {
    IpPrefix prefix = prefix_field(reader, row);
    auto asn = parse_asn(row.fields[1]);
    if (!asn) reader.fail(row, "invalid AS number '" + row.fields[1] + "'");
    if (table.insert(prefix, *asn) == OriginTable::InsertResult::conflict &&
        moas == MoasPolicy::error) {
      throw ConflictError(prefix.str(),
                          reader.path() + ":" + std::to_string(row.line) + ": " + prefix.str() +
                              " originated by both AS" +
                              std::to_string(table.find_exact(prefix)->value) + " and AS" +
                              std::to_string(asn->value));
    }
  });
  return table;
}

AsRegistry load_as_registry(const std::filesystem::path& file) {
  AsRegistry registry;
  for_each_pair(file, [&](const detail::CsvReader& reader, const detail::CsvRow& row) {
    auto asn = parse_asn(row.fields[0]);
    if (!asn) reader.fail(row, "invalid AS number '" + row.fields[0] + "'");
    auto code = CountryCode::parse(row.fields[1]);
    if (!code) reader.fail(row, "invalid country code '" + row.fields[1] + "'");
    try {
      registry.insert(*asn, *code);
    } catch (const ConflictError& e) {
      throw ConflictError(e.key(), reader.path() + ":" + std::to_string(row.line) + ": " + e.what());
    }
  });
  return registry;
}

}  // namespace geoexpose
