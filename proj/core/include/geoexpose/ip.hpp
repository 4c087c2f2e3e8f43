#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace geoexpose {

/// An IPv4 or IPv6 address. IPv4 addresses occupy the first four bytes.
class IpAddress {
 public:
  enum class Family : std::uint8_t { v4, v6 };

  constexpr IpAddress() = default;
  static std::optional<IpAddress> parse(std::string_view text);
  static IpAddress from_v4(std::uint32_t host_order) noexcept;
  static IpAddress from_v6(const std::array<std::uint8_t, 16>& bytes) noexcept;

  Family family() const noexcept { return family_; }
  unsigned bit_width() const noexcept { return family_ == Family::v4 ? 32 : 128; }
  const std::array<std::uint8_t, 16>& bytes() const noexcept { return bytes_; }
  /// Only meaningful for IPv4.
  std::uint32_t v4_value() const noexcept;

  /// Address with every bit past `length` cleared.
  IpAddress masked(unsigned length) const noexcept;
  std::string str() const;

  friend auto operator<=>(const IpAddress&, const IpAddress&) = default;

 private:
  Family family_ = Family::v4;
  std::array<std::uint8_t, 16> bytes_{};
};

struct IpPrefix {
  IpAddress network;
  unsigned length = 0;

  /// "a.b.c.d/len" or "v6/len"; a bare address is a host prefix. Rejects
  /// prefixes with host bits set.
  static std::optional<IpPrefix> parse(std::string_view text);
  bool contains(const IpAddress& ip) const noexcept;
  std::string str() const;

  friend auto operator<=>(const IpPrefix&, const IpPrefix&) = default;
};

/// Private, loopback, link-local, multicast and other reserved ranges from
/// the IANA special-purpose registries. Such addresses never geolocate.
bool is_special_purpose(const IpAddress& ip) noexcept;

}  // namespace geoexpose
