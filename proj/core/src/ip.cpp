#include "geoexpose/ip.hpp"

#include <arpa/inet.h>

#include <algorithm>
#include <charconv>

namespace geoexpose {

std::optional<IpAddress> IpAddress::parse(std::string_view text) {
  if (text.empty() || text.size() > INET6_ADDRSTRLEN) return std::nullopt;
  std::string buf(text);
  IpAddress ip;
  if (buf.find(':') == std::string::npos) {
    if (inet_pton(AF_INET, buf.c_str(), ip.bytes_.data()) != 1) return std::nullopt;
    ip.family_ = Family::v4;
  } else {
    if (inet_pton(AF_INET6, buf.c_str(), ip.bytes_.data()) != 1) return std::nullopt;
    ip.family_ = Family::v6;
  }
  return ip;
}

IpAddress IpAddress::from_v4(std::uint32_t host_order) noexcept {
  IpAddress ip;
  ip.family_ = Family::v4;
  for (int i = 0; i < 4; ++i) ip.bytes_[i] = static_cast<std::uint8_t>(host_order >> (24 - 8 * i));
  return ip;
}

IpAddress IpAddress::from_v6(const std::array<std::uint8_t, 16>& bytes) noexcept {
  IpAddress ip;
  ip.family_ = Family::v6;
  ip.bytes_ = bytes;
  return ip;
}

std::uint32_t IpAddress::v4_value() const noexcept {
  return (std::uint32_t{bytes_[0]} << 24) | (std::uint32_t{bytes_[1]} << 16) |
         (std::uint32_t{bytes_[2]} << 8) | std::uint32_t{bytes_[3]};
}

IpAddress IpAddress::masked(unsigned length) const noexcept {
  IpAddress out = *this;
  const unsigned width = bit_width();
  for (unsigned byte = 0; byte < width / 8; ++byte) {
    unsigned first_bit = byte * 8;
    if (first_bit >= length) {
      out.bytes_[byte] = 0;
    } else if (first_bit + 8 > length) {
      unsigned keep = length - first_bit;
      out.bytes_[byte] &= static_cast<std::uint8_t>(0xFF << (8 - keep));
    }
  }
  return out;
}

std::string IpAddress::str() const {
  char buf[INET6_ADDRSTRLEN] = {};
  inet_ntop(family_ == Family::v4 ? AF_INET : AF_INET6, bytes_.data(), buf, sizeof buf);
  return buf;
}

std::optional<IpPrefix> IpPrefix::parse(std::string_view text) {
  auto slash = text.find('/');
  auto ip = IpAddress::parse(text.substr(0, slash));
  if (!ip) return std::nullopt;
  unsigned length = ip->bit_width();
  if (slash != std::string_view::npos) {
    auto digits = text.substr(slash + 1);
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), length);
    if (ec != std::errc{} || ptr != digits.data() + digits.size() || digits.empty()) {
      return std::nullopt;
    }
    if (length > ip->bit_width()) return std::nullopt;
  }
  if (ip->masked(length) != *ip) return std::nullopt;
  return IpPrefix{*ip, length};
}

bool IpPrefix::contains(const IpAddress& ip) const noexcept {
  return ip.family() == network.family() && ip.masked(length) == network;
}

std::string IpPrefix::str() const { return network.str() + "/" + std::to_string(length); }

bool is_special_purpose(const IpAddress& ip) noexcept {
  static const IpPrefix kReserved[] = {
      // IPv4 (RFC 6890 and successors)
      *IpPrefix::parse("0.0.0.0/8"),       *IpPrefix::parse("10.0.0.0/8"),
      *IpPrefix::parse("100.64.0.0/10"),   *IpPrefix::parse("127.0.0.0/8"),
      *IpPrefix::parse("169.254.0.0/16"),  *IpPrefix::parse("172.16.0.0/12"),
      *IpPrefix::parse("192.0.0.0/24"),    *IpPrefix::parse("192.0.2.0/24"),
      *IpPrefix::parse("192.168.0.0/16"),  *IpPrefix::parse("198.18.0.0/15"),
      *IpPrefix::parse("198.51.100.0/24"), *IpPrefix::parse("203.0.113.0/24"),
      *IpPrefix::parse("224.0.0.0/4"),     *IpPrefix::parse("240.0.0.0/4"),
      // IPv6
      *IpPrefix::parse("::/127"),          *IpPrefix::parse("::ffff:0:0/96"),
      *IpPrefix::parse("64:ff9b:1::/48"),  *IpPrefix::parse("100::/64"),
      *IpPrefix::parse("2001:db8::/32"),   *IpPrefix::parse("fc00::/7"),
      *IpPrefix::parse("fe80::/10"),       *IpPrefix::parse("ff00::/8"),
  };
  return std::any_of(std::begin(kReserved), std::end(kReserved),
                     [&](const IpPrefix& p) { return p.contains(ip); });
}

}  // namespace geoexpose
