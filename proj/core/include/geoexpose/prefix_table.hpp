#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "geoexpose/ip.hpp"

namespace geoexpose {

/// Longest-prefix-match table over IPv4 and IPv6 prefixes.
///
/// One hash map per distinct prefix length; a lookup probes the populated
/// lengths of the address family from longest to shortest. Memory is linear
/// in the number of entries, which suits tables with millions of rows.
template <typename V>
class PrefixTable {
 public:
  enum class InsertResult { inserted, duplicate, conflict };

  struct Entry {
    IpPrefix prefix;
    V value;
  };

  /// A prefix already present keeps its value: `duplicate` when the values
  /// agree, `conflict` otherwise.
  InsertResult insert(const IpPrefix& prefix, V value) {
    auto& lengths = family_index(prefix.network.family());
    auto& bucket = lengths[prefix.length];
    auto [it, inserted] = bucket.try_emplace(key_of(prefix.network), entries_.size());
    if (!inserted) {
      return entries_[it->second].value == value ? InsertResult::duplicate
                                                 : InsertResult::conflict;
    }
    entries_.push_back(Entry{prefix, std::move(value)});
    if (bucket.size() == 1) rebuild_order(prefix.network.family());
    return InsertResult::inserted;
  }

  /// Entry with the longest prefix containing `ip`.
  const Entry* match(const IpAddress& ip) const noexcept {
    const bool v4 = ip.family() == IpAddress::Family::v4;
    const auto& lengths = v4 ? v4_ : v6_;
    for (unsigned len : v4 ? v4_order_ : v6_order_) {
      const auto& bucket = lengths[len];
      if (auto it = bucket.find(key_of(ip.masked(len))); it != bucket.end()) {
        return &entries_[it->second];
      }
    }
    return nullptr;
  }

  std::optional<V> lookup(const IpAddress& ip) const {
    if (const Entry* e = match(ip)) return e->value;
    return std::nullopt;
  }

  const V* find_exact(const IpPrefix& prefix) const noexcept {
    const auto& lengths =
        prefix.network.family() == IpAddress::Family::v4 ? v4_ : v6_;
    if (prefix.length >= lengths.size()) return nullptr;
    const auto& bucket = lengths[prefix.length];
    auto it = bucket.find(key_of(prefix.network));
    return it == bucket.end() ? nullptr : &entries_[it->second].value;
  }

  /// Entries in insertion order.
  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

 private:
  using Key = std::array<std::uint64_t, 2>;
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept {
      return std::hash<std::uint64_t>{}(k[0] * 0x9E3779B97F4A7C15ull ^ k[1]);
    }
  };
  using Bucket = std::unordered_map<Key, std::size_t, KeyHash>;

  static Key key_of(const IpAddress& ip) noexcept {
    Key k{0, 0};
    const auto& b = ip.bytes();
    for (int i = 0; i < 8; ++i) {
      k[0] = (k[0] << 8) | b[i];
      k[1] = (k[1] << 8) | b[i + 8];
    }
    return k;
  }

  std::vector<Bucket>& family_index(IpAddress::Family f) {
    return f == IpAddress::Family::v4 ? v4_ : v6_;
  }

  void rebuild_order(IpAddress::Family f) {
    const auto& lengths = family_index(f);
    auto& order = f == IpAddress::Family::v4 ? v4_order_ : v6_order_;
    order.clear();
    for (unsigned len = static_cast<unsigned>(lengths.size()); len-- > 0;) {
      if (!lengths[len].empty()) order.push_back(len);
    }
  }

  std::vector<Entry> entries_;
  std::vector<Bucket> v4_ = std::vector<Bucket>(33);
  std::vector<Bucket> v6_ = std::vector<Bucket>(129);
  std::vector<unsigned> v4_order_, v6_order_;  // populated lengths, longest first
};

template <typename V>
std::optional<V> lpm_lookup(const PrefixTable<V>& table, const IpAddress& ip) {
  return table.lookup(ip);
}

}  // namespace geoexpose
