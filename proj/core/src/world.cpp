#include "geoexpose/world.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "csv.hpp"

namespace geoexpose {

namespace {

using nlohmann::json;

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

bool is_header(const detail::CsvRow& row, std::initializer_list<std::string_view> names) {
  if (row.fields.size() < names.size()) return false;
  std::size_t i = 0;
  for (auto n : names) {
    if (lower(row.fields[i++]) != n) return false;
  }
  return true;
}

std::vector<GeoPoint> parse_ring(const json& ring, const std::string& where) {
  if (!ring.is_array()) throw ParseError(where, 0, "ring is not an array");
  std::vector<GeoPoint> pts;
  pts.reserve(ring.size());
  for (const auto& pos : ring) {
    if (!pos.is_array() || pos.size() < 2 || !pos[0].is_number() || !pos[1].is_number()) {
      throw ParseError(where, 0, "position is not [lon, lat]");
    }
    try {
      pts.emplace_back(pos[1].get<double>(), pos[0].get<double>());
    } catch (const GeometryError& e) {
      throw ParseError(where, 0, e.what());
    }
  }
  if (pts.size() > 1 && pts.front() == pts.back()) pts.pop_back();
  return pts;
}

GeoPolygon parse_polygon(const json& coords, const std::string& where) {
  if (!coords.is_array() || coords.empty()) throw ParseError(where, 0, "polygon has no rings");
  GeoPolygon poly;
  for (const auto& ring : coords) poly.rings.push_back(parse_ring(ring, where));
  return poly;
}

}  // namespace

WorldModel::WorldModel(std::vector<CountryRecord> records, std::vector<CountryBorders> borders,
                       std::map<CountryCode, Region> regions, WorldOptions options)
    : regions_(std::move(regions)), options_(options) {
  if (options_.cities_per_country == 0) {
    throw ValidationError("cities_per_country must be at least 1");
  }
  for (auto& rec : records) {
    const std::string code = rec.iso2.str();
    if (rec.cities.empty()) throw ValidationError("country " + code + " has no cities");
    std::stable_sort(rec.cities.begin(), rec.cities.end(),
                     [](const City& a, const City& b) { return a.population > b.population; });
    if (auto it = regions_.find(rec.iso2); it != regions_.end() && it->second != rec.region) {
      throw ValidationError("conflicting regions for " + code);
    }
    regions_[rec.iso2] = rec.region;
    if (!records_.emplace(rec.iso2, std::move(rec)).second) {
      throw ValidationError("duplicate country record " + code);
    }
  }
  for (auto& b : borders) {
    const std::string code = b.iso2.str();
    if (b.polygons.empty()) throw ValidationError("country " + code + " has no border polygons");
    Borders entry;
    for (std::size_t i = 0; i < b.polygons.size(); ++i) {
      try {
        entry.prepared.emplace_back(b.polygons[i]);
      } catch (const ValidationError& e) {
        throw ValidationError("border polygon " + std::to_string(i) + " of " + code + ": " +
                              e.what());
      }
    }
    entry.raw = std::move(b);
    if (!borders_.emplace(entry.raw.iso2, std::move(entry)).second) {
      throw ValidationError("duplicate borders for " + code);
    }
  }
}

const CountryRecord* WorldModel::find(CountryCode code) const noexcept {
  auto it = records_.find(code);
  return it == records_.end() ? nullptr : &it->second;
}

const CountryRecord& WorldModel::country(CountryCode code) const {
  if (const auto* rec = find(code)) return *rec;
  throw UnknownCountry(code.str());
}

std::optional<Region> WorldModel::region_of(CountryCode code) const noexcept {
  auto it = regions_.find(code);
  if (it == regions_.end()) return std::nullopt;
  return it->second;
}

std::span<const City> WorldModel::top_cities(CountryCode code) const {
  const auto& cities = country(code).cities;
  return {cities.data(), std::min(cities.size(), options_.cities_per_country)};
}

bool WorldModel::in_borders(CountryCode code, const UnitVec3& p) const noexcept {
  auto it = borders_.find(code);
  if (it == borders_.end()) return false;
  return std::any_of(it->second.prepared.begin(), it->second.prepared.end(),
                     [&](const PreparedPolygon& poly) { return poly.contains(p); });
}

std::vector<std::string> WorldModel::consistency_warnings() const {
  std::vector<std::string> out;
  for (const auto& [code, rec] : records_) {
    if (!has_borders(code)) continue;
    for (const auto& city : top_cities(code)) {
      if (!in_borders(code, geo_to_unit(city.location))) {
        out.push_back("city '" + city.name + "' lies outside the borders of " + code.str());
      }
    }
  }
  return out;
}

std::vector<CountryBorders> load_borders(const std::filesystem::path& borders_file,
                                         std::map<CountryCode, std::string>* names,
                                         std::vector<std::string>* warnings) {
  const std::string path = borders_file.string();
  std::ifstream in(borders_file);
  if (!in) throw ParseError(path, 0, "cannot open file");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path, 0, std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" ||
      !doc.contains("features") || !doc["features"].is_array()) {
    throw ParseError(path, 0, "expected a GeoJSON FeatureCollection");
  }

  std::map<CountryCode, CountryBorders> merged;
  std::size_t index = 0;
  for (const auto& feature : doc["features"]) {
    const std::string where = path + " feature " + std::to_string(index++);
    const json props = feature.value("properties", json::object());
    std::string raw_code;
    for (const char* key : {"iso2", "ISO_A2", "iso_a2"}) {
      if (props.contains(key) && props[key].is_string()) {
        raw_code = props[key].get<std::string>();
        break;
      }
    }
    auto code = CountryCode::parse(raw_code);
    if (!code) {
      if (warnings) warnings->push_back(where + ": no usable iso2 property, skipped");
      continue;
    }
    if (names && props.contains("name") && props["name"].is_string()) {
      names->emplace(*code, props["name"].get<std::string>());
    }
    const json& geom = feature.value("geometry", json());
    const std::string type = geom.is_object() ? geom.value("type", "") : "";
    auto& entry = merged[*code];
    entry.iso2 = *code;
    if (type == "Polygon") {
      entry.polygons.push_back(parse_polygon(geom["coordinates"], where));
    } else if (type == "MultiPolygon") {
      if (!geom["coordinates"].is_array()) throw ParseError(where, 0, "bad MultiPolygon");
      for (const auto& poly : geom["coordinates"]) {
        entry.polygons.push_back(parse_polygon(poly, where));
      }
    } else if (warnings) {
      warnings->push_back(where + ": geometry type '" + type + "' ignored");
    }
  }

  std::vector<CountryBorders> out;
  for (auto& [code, b] : merged) {
    if (!b.polygons.empty()) out.push_back(std::move(b));
  }
  return out;
}

LoadedWorld load_world(const std::filesystem::path& cities_file,
                       const std::filesystem::path& borders_file,
                       const std::filesystem::path& regions_file, WorldOptions options) {
  LoadSummary summary;

  std::map<CountryCode, Region> regions;
  {
    detail::CsvReader reader(regions_file.string());
    bool first = true;
    while (auto row = reader.next()) {
      if (first && is_header(*row, {"iso2", "region"})) {
        first = false;
        continue;
      }
      first = false;
      if (row->fields.size() != 2) reader.fail(*row, "expected 2 fields: iso2,region");
      auto code = CountryCode::parse(row->fields[0]);
      if (!code) reader.fail(*row, "bad iso2 code '" + row->fields[0] + "'");
      auto region = parse_region(row->fields[1]);
      if (!region) reader.fail(*row, "unknown region '" + row->fields[1] + "'");
      if (auto [it, fresh] = regions.emplace(*code, *region); !fresh && it->second != *region) {
        reader.fail(*row, "conflicting region for " + code->str());
      }
    }
  }

  std::map<CountryCode, std::vector<City>> cities;
  {
    detail::CsvReader reader(cities_file.string());
    auto header = reader.next();
    if (!header || !is_header(*header, {"iso2", "city", "lat", "lon", "population"})) {
      throw ParseError(cities_file.string(), header ? header->line : 0,
                       "missing header row iso2,city,lat,lon,population");
    }
    while (auto row = reader.next()) {
      if (row->fields.size() != 5) reader.fail(*row, "expected 5 fields");
      auto code = CountryCode::parse(row->fields[0]);
      if (!code) reader.fail(*row, "bad iso2 code '" + row->fields[0] + "'");
      auto lat = detail::parse_number<double>(row->fields[2]);
      auto lon = detail::parse_number<double>(row->fields[3]);
      if (!lat) reader.fail(*row, "bad lat '" + row->fields[2] + "'");
      if (!lon) reader.fail(*row, "bad lon '" + row->fields[3] + "'");
      auto pop = detail::parse_number<std::uint64_t>(row->fields[4]);
      if (!pop) reader.fail(*row, "bad population '" + row->fields[4] + "'");
      City city;
      city.name = row->fields[1];
      city.population = *pop;
      try {
        city.location = GeoPoint(*lat, *lon);
      } catch (const GeometryError& e) {
        reader.fail(*row, std::string("city '") + city.name + "': " + e.what());
      }
      cities[*code].push_back(std::move(city));
      ++summary.city_rows;
    }
  }

  std::map<CountryCode, std::string> names;
  auto borders = load_borders(borders_file, &names, &summary.warnings);
  std::set<CountryCode> bordered;
  for (const auto& b : borders) bordered.insert(b.iso2);

  std::vector<CountryRecord> records;
  for (auto& [code, list] : cities) {
    auto region = regions.find(code);
    if (region == regions.end()) {
      summary.without_region.push_back(code);
      continue;
    }
    CountryRecord rec;
    rec.iso2 = code;
    auto name = names.find(code);
    rec.name = name != names.end() ? name->second : code.str();
    rec.region = region->second;
    rec.cities = std::move(list);
    if (!bordered.count(code)) summary.without_borders.push_back(code);
    records.push_back(std::move(rec));
  }
  for (const auto& code : bordered) {
    if (!cities.count(code)) summary.borders_only.push_back(code);
  }
  for (const auto& [code, region] : regions) {
    if (!cities.count(code) && !bordered.count(code)) summary.region_only.push_back(code);
  }

  WorldModel world(std::move(records), std::move(borders), std::move(regions), options);
  for (auto& w : world.consistency_warnings()) summary.warnings.push_back(std::move(w));
  return LoadedWorld{std::move(world), std::move(summary)};
}

std::vector<GeoPoint> country_points(const WorldModel& world, CountryCode code, HullMode mode) {
  const CountryRecord& rec = world.country(code);
  std::vector<GeoPoint> out;
  if (mode == HullMode::population) {
    for (const auto& city : world.top_cities(code)) out.push_back(city.location);
    return out;
  }
  auto it = world.borders().find(rec.iso2);
  if (it == world.borders().end()) {
    throw UnknownCountry(code.str(), "no border polygons for country " + code.str());
  }
  for (const auto& poly : it->second.raw.polygons) {
    for (const auto& ring : poly.rings) out.insert(out.end(), ring.begin(), ring.end());
  }
  return out;
}

}  // namespace geoexpose
