#include "geoexpose/country.hpp"

#include <cctype>
#include <stdexcept>

namespace geoexpose {

CountryCode CountryCode::of(std::string_view text) {
  auto code = parse(text);
  if (!code) throw std::invalid_argument("not an ISO alpha-2 code: '" + std::string(text) + "'");
  return *code;
}

std::string_view to_string(Region r) noexcept {
  switch (r) {
    case Region::africa: return "Africa";
    case Region::americas: return "Americas";
    case Region::asia: return "Asia";
    case Region::europe: return "Europe";
    case Region::oceania: return "Oceania";
  }
  return "?";
}

std::optional<Region> parse_region(std::string_view text) noexcept {
  auto same = [](std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (std::tolower(static_cast<unsigned char>(a[i])) !=
          std::tolower(static_cast<unsigned char>(b[i]))) {
        return false;
      }
    }
    return true;
  };
  for (Region r : kAllRegions) {
    if (same(to_string(r), text)) return r;
  }
  return std::nullopt;
}

std::string_view to_string(HullMode m) noexcept {
  return m == HullMode::population ? "population" : "border";
}

std::optional<HullMode> parse_hull_mode(std::string_view text) noexcept {
  if (text == "population") return HullMode::population;
  if (text == "border") return HullMode::border;
  return std::nullopt;
}

std::string_view to_string(Exposure e) noexcept {
  switch (e) {
    case Exposure::physical: return "physical";
    case Exposure::legal: return "legal";
    case Exposure::union_: return "union";
  }
  return "?";
}

}  // namespace geoexpose
