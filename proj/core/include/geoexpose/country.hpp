#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace geoexpose {

/// ISO 3166-1 alpha-2 code, always stored uppercase.
class CountryCode {
 public:
  constexpr CountryCode() = default;

  /// Accepts exactly two ASCII letters in either case.
  static constexpr std::optional<CountryCode> parse(std::string_view text) noexcept {
    if (text.size() != 2) return std::nullopt;
    CountryCode code;
    for (std::size_t i = 0; i < 2; ++i) {
      char c = text[i];
      if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
      if (c < 'A' || c > 'Z') return std::nullopt;
      code.chars_[i] = c;
    }
    return code;
  }

  /// Like parse(), but throws std::invalid_argument. Meant for literals.
  static CountryCode of(std::string_view text);

  std::string_view view() const noexcept { return {chars_.data(), 2}; }
  std::string str() const { return std::string(view()); }
  bool empty() const noexcept { return chars_[0] == '\0'; }

  friend constexpr auto operator<=>(const CountryCode&, const CountryCode&) = default;

 private:
  std::array<char, 2> chars_{};
};

enum class Region { africa, americas, asia, europe, oceania };

inline constexpr std::array<Region, 5> kAllRegions = {
    Region::africa, Region::americas, Region::asia, Region::europe, Region::oceania};

std::string_view to_string(Region r) noexcept;
std::optional<Region> parse_region(std::string_view text) noexcept;

/// How a country is turned into hull input points.
enum class HullMode { population, border };

std::string_view to_string(HullMode m) noexcept;
std::optional<HullMode> parse_hull_mode(std::string_view text) noexcept;

/// Which notion of "the countries on a path" a verdict is computed over.
enum class Exposure { physical, legal, union_ };

inline constexpr std::array<Exposure, 3> kAllExposures = {Exposure::physical, Exposure::legal,
                                                         Exposure::union_};

std::string_view to_string(Exposure e) noexcept;

/// Autonomous system number.
struct Asn {
  std::uint32_t value = 0;
  friend constexpr auto operator<=>(const Asn&, const Asn&) = default;
};

}  // namespace geoexpose

template <>
struct std::hash<geoexpose::CountryCode> {
  std::size_t operator()(const geoexpose::CountryCode& c) const noexcept {
    auto v = c.view();
    return (static_cast<std::size_t>(static_cast<unsigned char>(v[0])) << 8) |
           static_cast<unsigned char>(v[1]);
  }
};
