#include <algorithm>
#include <random>

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include "geoexpose/enrichment.hpp"
#include "geoexpose/error.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

namespace geoexpose {
namespace {

using testing::TempDir;
using testing::write_file;
using ::testing::HasSubstr;

CountryCode cc(const char* s) { return CountryCode::of(s); }
IpAddress ip(const char* s) { return *IpAddress::parse(s); }
IpPrefix pfx(const char* s) { return *IpPrefix::parse(s); }

TEST(IpAddress, ParsesBothFamilies) {
  auto v4 = IpAddress::parse("1.2.3.4");
  ASSERT_TRUE(v4);
  EXPECT_EQ(v4->family(), IpAddress::Family::v4);
  EXPECT_EQ(v4->v4_value(), 0x01020304u);
  EXPECT_EQ(v4->str(), "1.2.3.4");
  auto v6 = IpAddress::parse("2001:DB8::1");
  ASSERT_TRUE(v6);
  EXPECT_EQ(v6->family(), IpAddress::Family::v6);
  EXPECT_EQ(v6->str(), "2001:db8::1");
  EXPECT_FALSE(IpAddress::parse("1.2.3"));
  EXPECT_FALSE(IpAddress::parse("256.1.1.1"));
  EXPECT_FALSE(IpAddress::parse("*"));
  EXPECT_FALSE(IpAddress::parse(""));
  EXPECT_EQ(IpAddress::from_v4(0x0A000001u), ip("10.0.0.1"));
  EXPECT_NE(ip("::1"), ip("0.0.0.1"));
}

TEST(IpAddress, Masking) {
  EXPECT_EQ(ip("1.2.3.4").masked(16), ip("1.2.0.0"));
  EXPECT_EQ(ip("1.2.3.255").masked(25), ip("1.2.3.128"));
  EXPECT_EQ(ip("1.2.3.4").masked(32), ip("1.2.3.4"));
  EXPECT_EQ(ip("1.2.3.4").masked(0), ip("0.0.0.0"));
  EXPECT_EQ(ip("2001:db8:ffff::1").masked(36), ip("2001:db8:f000::"));
}

TEST(IpPrefix, ParseAndContains) {
  auto p = IpPrefix::parse("10.1.0.0/16");
  ASSERT_TRUE(p);
  EXPECT_EQ(p->length, 16u);
  EXPECT_TRUE(p->contains(ip("10.1.255.3")));
  EXPECT_FALSE(p->contains(ip("10.2.0.0")));
  EXPECT_FALSE(p->contains(ip("::a01:0")));
  EXPECT_EQ(p->str(), "10.1.0.0/16");
  EXPECT_EQ(IpPrefix::parse("1.2.3.4")->length, 32u);
  EXPECT_EQ(IpPrefix::parse("2001:db8::/32")->length, 32u);
  EXPECT_FALSE(IpPrefix::parse("10.1.0.1/16"));  // host bits
  EXPECT_FALSE(IpPrefix::parse("10.0.0.0/33"));
  EXPECT_FALSE(IpPrefix::parse("10.0.0.0/"));
  EXPECT_FALSE(IpPrefix::parse("10.0.0.0/-1"));
  EXPECT_FALSE(IpPrefix::parse("::/129"));
}

TEST(SpecialPurpose, ReservedRanges) {
  for (const char* s : {"10.0.0.1", "127.0.0.1", "169.254.1.1", "172.16.0.1", "172.31.255.255",
                        "192.168.1.1", "100.64.0.1", "192.0.2.7", "198.51.100.1", "203.0.113.9",
                        "224.0.0.1", "255.255.255.255", "0.1.2.3", "198.18.0.1", "::1", "::",
                        "fe80::1", "fc00::1", "fd12::1", "ff02::1", "2001:db8::1",
                        "::ffff:1.2.3.4"}) {
    EXPECT_TRUE(is_special_purpose(ip(s))) << s;
  }
  for (const char* s : {"8.8.8.8", "1.1.1.1", "172.32.0.1", "100.128.0.1", "192.169.0.1",
                        "2606:4700::1111", "2a00::1"}) {
    EXPECT_FALSE(is_special_purpose(ip(s))) << s;
  }
}

TEST(PrefixTable, LongestMatchWins) {
  PrefixTable<CountryCode> t;
  t.insert(pfx("1.2.0.0/16"), cc("US"));
  t.insert(pfx("1.2.3.0/24"), cc("GB"));
  EXPECT_EQ(lpm_lookup(t, ip("1.2.3.4")), cc("GB"));
  EXPECT_EQ(lpm_lookup(t, ip("1.2.9.9")), cc("US"));
  EXPECT_FALSE(lpm_lookup(t, ip("1.3.0.0")));
}

TEST(PrefixTable, EmptyTableAnswersNothing) {
  PrefixTable<CountryCode> t;
  EXPECT_TRUE(t.empty());
  EXPECT_FALSE(lpm_lookup(t, ip("1.2.3.4")));
  EXPECT_FALSE(lpm_lookup(t, ip("2001::1")));
}

TEST(PrefixTable, DefaultRouteAndHostRoutes) {
  PrefixTable<int> t;
  t.insert(pfx("0.0.0.0/0"), 0);
  t.insert(pfx("9.9.9.9/32"), 32);
  t.insert(pfx("::/0"), 100);
  EXPECT_EQ(t.lookup(ip("200.1.1.1")), 0);
  EXPECT_EQ(t.lookup(ip("9.9.9.9")), 32);
  EXPECT_EQ(t.lookup(ip("9.9.9.8")), 0);
  EXPECT_EQ(t.lookup(ip("2a00::1")), 100);
}

TEST(PrefixTable, InsertReportsDuplicatesAndConflicts) {
  PrefixTable<int> t;
  using R = PrefixTable<int>::InsertResult;
  EXPECT_EQ(t.insert(pfx("1.0.0.0/8"), 1), R::inserted);
  EXPECT_EQ(t.insert(pfx("1.0.0.0/8"), 1), R::duplicate);
  EXPECT_EQ(t.insert(pfx("1.0.0.0/8"), 2), R::conflict);
  EXPECT_EQ(t.size(), 1u);
  EXPECT_EQ(*t.find_exact(pfx("1.0.0.0/8")), 1);
  EXPECT_EQ(t.find_exact(pfx("1.0.0.0/9")), nullptr);
}

TEST(PrefixTable, FamiliesAreSeparate) {
  PrefixTable<int> t;
  t.insert(pfx("::/96"), 6);
  EXPECT_FALSE(t.lookup(ip("1.2.3.4")));
  EXPECT_EQ(t.lookup(ip("::1.2.3.4")), 6);
}

std::vector<std::pair<IpPrefix, int>> random_prefixes(std::mt19937_64& rng, std::size_t n) {
  std::vector<std::pair<IpPrefix, int>> out;
  std::uniform_int_distribution<std::uint32_t> addr;
  std::uniform_int_distribution<unsigned> len(8, 28);
  // A narrow address pool makes nesting common.
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t a = (addr(rng) & 0x03FFFFFFu) | 0x40000000u;
    unsigned l = len(rng);
    IpPrefix p{IpAddress::from_v4(a).masked(l), l};
    out.emplace_back(p, static_cast<int>(i));
  }
  return out;
}

TEST(PrefixTable, MatchesBruteForceAndIgnoresInsertionOrder) {
  std::mt19937_64 rng(31);
  auto entries = random_prefixes(rng, 600);
  // Keep the first value per prefix so both tables hold the same mapping.
  std::vector<std::pair<IpPrefix, int>> unique;
  for (const auto& e : entries) {
    if (std::none_of(unique.begin(), unique.end(), [&](const auto& u) { return u.first == e.first; })) {
      unique.push_back(e);
    }
  }
  PrefixTable<int> forward, shuffled;
  for (const auto& [p, v] : unique) forward.insert(p, v);
  auto perm = unique;
  std::shuffle(perm.begin(), perm.end(), rng);
  for (const auto& [p, v] : perm) shuffled.insert(p, v);

  std::uniform_int_distribution<std::uint32_t> addr;
  for (int i = 0; i < 5000; ++i) {
    IpAddress probe = IpAddress::from_v4((addr(rng) & 0x03FFFFFFu) | 0x40000000u);
    auto want = oracle::brute_force_lpm(std::span<const std::pair<IpPrefix, int>>(unique), probe);
    EXPECT_EQ(forward.lookup(probe), want);
    EXPECT_EQ(shuffled.lookup(probe), want);
  }
}

TEST(AsRegistry, InsertAndConflict) {
  AsRegistry reg;
  reg.insert(Asn{100}, cc("US"));
  reg.insert(Asn{100}, cc("US"));
  EXPECT_EQ(reg.size(), 1u);
  EXPECT_EQ(reg.find(Asn{100}), cc("US"));
  EXPECT_FALSE(reg.find(Asn{101}));
  EXPECT_THROW(reg.insert(Asn{100}, cc("GB")), ConflictError);
  EXPECT_THROW(reg.insert(Asn{0}, cc("GB")), ValidationError);
}

TEST(ParseAsn, AcceptsPrefixAndRange) {
  EXPECT_EQ(parse_asn("64500")->value, 64500u);
  EXPECT_EQ(parse_asn("AS64500")->value, 64500u);
  EXPECT_EQ(parse_asn("as7")->value, 7u);
  EXPECT_EQ(parse_asn("4294967295")->value, 4294967295u);
  EXPECT_FALSE(parse_asn("4294967296"));
  EXPECT_FALSE(parse_asn("0"));
  EXPECT_FALSE(parse_asn("AS"));
  EXPECT_FALSE(parse_asn("-5"));
  EXPECT_FALSE(parse_asn("12x"));
}

TEST(ParseUtcDate, Midnight) {
  EXPECT_EQ(parse_utc_date("1970-01-01"), 0);
  EXPECT_EQ(parse_utc_date("2015-01-01"), 1420070400);
  EXPECT_FALSE(parse_utc_date("2015-02-30"));
  EXPECT_FALSE(parse_utc_date("2015-1-1"));
  EXPECT_FALSE(parse_utc_date("yesterday"));
}

struct Tables {
  GeoTable geo;
  OriginTable origin;
  AsRegistry reg;
};

Tables us_de_tables() {
  Tables t;
  t.geo.insert(pfx("20.0.0.0/8"), cc("US"));
  t.geo.insert(pfx("30.0.0.0/8"), cc("DE"));
  t.geo.insert(pfx("10.0.0.0/8"), cc("FR"));  // shadowed by the private-range rule
  t.origin.insert(pfx("20.1.0.0/16"), Asn{100});
  t.origin.insert(pfx("10.0.0.0/8"), Asn{100});
  t.reg.insert(Asn{100}, cc("US"));
  return t;
}

TEST(ResolveHop, FullHit) {
  auto t = us_de_tables();
  auto r = resolve_hop(t.geo, t.origin, t.reg, ip("20.1.2.3"));
  EXPECT_EQ(r.phys_country, cc("US"));
  EXPECT_EQ(r.asn, Asn{100});
  EXPECT_EQ(r.legal_country, cc("US"));
}

TEST(ResolveHop, OriginMissLeavesAsAndLegalUnknown) {
  auto t = us_de_tables();
  auto r = resolve_hop(t.geo, t.origin, t.reg, ip("30.1.2.3"));
  EXPECT_EQ(r.phys_country, cc("DE"));
  EXPECT_FALSE(r.asn);
  EXPECT_FALSE(r.legal_country);
}

TEST(ResolveHop, PrivateAddressIsFullyUnknownWhateverTheTables) {
  auto t = us_de_tables();
  auto r = resolve_hop(t.geo, t.origin, t.reg, ip("10.0.0.1"));
  EXPECT_FALSE(r.phys_country);
  EXPECT_FALSE(r.asn);
  EXPECT_FALSE(r.legal_country);
}

TEST(ResolveHop, UnregisteredAsHasNoLegalCountry) {
  auto t = us_de_tables();
  t.origin.insert(pfx("30.9.0.0/16"), Asn{999});
  auto r = resolve_hop(t.geo, t.origin, t.reg, ip("30.9.0.1"));
  EXPECT_EQ(r.asn, Asn{999});
  EXPECT_FALSE(r.legal_country);
  auto no_origin = resolve_hop(t.geo, nullptr, t.reg, ip("20.1.2.3"));
  EXPECT_EQ(no_origin.phys_country, cc("US"));
  EXPECT_FALSE(no_origin.asn);
}

TEST(Loaders, ThreeRowGeoTable) {
  TempDir dir;
  write_file(dir.path() / "geo.csv", "cidr,iso2\n1.0.0.0/8,AA\n2.0.0.0/16,bb\n2001:db8::/32,CC\n");
  auto geo = load_geo_table(dir.path() / "geo.csv");
  EXPECT_EQ(geo.size(), 3u);
  EXPECT_EQ(geo.lookup(ip("1.9.9.9")), cc("AA"));
  EXPECT_EQ(geo.lookup(ip("2.0.1.1")), cc("BB"));
  EXPECT_EQ(geo.lookup(ip("2001:db8::5")), cc("CC"));
}

TEST(Loaders, HeaderIsOptional) {
  TempDir dir;
  write_file(dir.path() / "geo.csv", "1.0.0.0/8,AA\n");
  EXPECT_EQ(load_geo_table(dir.path() / "geo.csv").size(), 1u);
  write_file(dir.path() / "reg.csv", "asn,iso2\nAS5,AA\n6,BB\n");
  auto reg = load_as_registry(dir.path() / "reg.csv");
  EXPECT_EQ(reg.find(Asn{5}), cc("AA"));
  EXPECT_EQ(reg.find(Asn{6}), cc("BB"));
}

TEST(Loaders, DuplicatePrefixWithDifferentCountriesIsConflict) {
  TempDir dir;
  write_file(dir.path() / "geo.csv", "cidr,iso2\n1.0.0.0/8,AA\n1.0.0.0/8,AA\n1.0.0.0/8,BB\n");
  try {
    load_geo_table(dir.path() / "geo.csv");
    FAIL() << "expected ConflictError";
  } catch (const ConflictError& e) {
    EXPECT_EQ(e.key(), "1.0.0.0/8");
    EXPECT_THAT(e.what(), HasSubstr("geo.csv:4"));
  }
}

TEST(Loaders, MultipleOriginsConflictUnlessFirstWins) {
  TempDir dir;
  write_file(dir.path() / "origin.csv", "cidr,asn\n1.2.3.0/24,100\n1.2.3.0/24,AS200\n");
  EXPECT_THROW(load_origin_table(dir.path() / "origin.csv"), ConflictError);
  auto t = load_origin_table(dir.path() / "origin.csv", MoasPolicy::first_wins);
  EXPECT_EQ(t.lookup(ip("1.2.3.4")), Asn{100});
}

TEST(Loaders, RegistryConflictNamesLine) {
  TempDir dir;
  write_file(dir.path() / "reg.csv", "100,US\n100,GB\n");
  try {
    load_as_registry(dir.path() / "reg.csv");
    FAIL() << "expected ConflictError";
  } catch (const ConflictError& e) {
    EXPECT_THAT(e.what(), HasSubstr("reg.csv:2"));
  }
}

TEST(Loaders, MalformedRowsAreParseErrorsWithLine) {
  TempDir dir;
  auto expect_line = [&](const std::string& name, const std::string& body, std::size_t line,
                         auto loader) {
    write_file(dir.path() / name, body);
    try {
      loader(dir.path() / name);
      ADD_FAILURE() << "expected ParseError for " << body;
    } catch (const ParseError& e) {
      EXPECT_EQ(e.line(), line) << body;
    }
  };
  auto geo = [](const std::filesystem::path& p) { load_geo_table(p); };
  auto origin = [](const std::filesystem::path& p) { load_origin_table(p); };
  auto reg = [](const std::filesystem::path& p) { load_as_registry(p); };
  expect_line("g.csv", "cidr,iso2\n1.0.0.0/8,AA\n1.0.0.1/8,AA\n", 3, geo);
  expect_line("g.csv", "1.0.0.0/8,AAA\n", 1, geo);
  expect_line("g.csv", "1.0.0.0/8\n", 1, geo);
  expect_line("o.csv", "1.0.0.0/8,ASX\n", 1, origin);
  expect_line("o.csv", "1.0.0.0/8,0\n", 1, origin);
  expect_line("r.csv", "asn,iso2\n100,US\nfoo,US\n", 3, reg);
  EXPECT_THROW(load_geo_table(dir.path() / "missing.csv"), ParseError);
}

TEST(Loaders, LegalRegistrationAbroad) {
  // One /24 originated by an AS registered in Bulgaria while the address
  // geolocates to Germany.
  TempDir dir;
  write_file(dir.path() / "geo.csv", "77.0.0.0/8,DE\n");
  write_file(dir.path() / "origin.csv", "77.1.2.0/24,64500\n");
  write_file(dir.path() / "reg.csv", "64500,BG\n");
  Enrichment e{load_geo_table(dir.path() / "geo.csv"),
               OriginSnapshots(load_origin_table(dir.path() / "origin.csv")),
               load_as_registry(dir.path() / "reg.csv")};
  auto r = e.resolve(ip("77.1.2.200"), 0);
  EXPECT_EQ(r.phys_country, cc("DE"));
  EXPECT_EQ(r.asn, Asn{64500});
  EXPECT_EQ(r.legal_country, cc("BG"));
  auto outside = e.resolve(ip("77.1.3.1"), 0);
  EXPECT_EQ(outside.phys_country, cc("DE"));
  EXPECT_FALSE(outside.legal_country);
}

TEST(OriginSnapshots, SelectsLatestStartAtOrBeforeTimestamp) {
  OriginSnapshots s;
  EXPECT_EQ(s.select(0), nullptr);
  OriginTable a, b;
  a.insert(pfx("1.0.0.0/8"), Asn{1});
  b.insert(pfx("1.0.0.0/8"), Asn{2});
  s.add(1000, std::move(a));
  s.add(2000, std::move(b));
  EXPECT_EQ(s.select(500)->lookup(ip("1.1.1.1")), Asn{1});  // before all: earliest
  EXPECT_EQ(s.select(1000)->lookup(ip("1.1.1.1")), Asn{1});
  EXPECT_EQ(s.select(1999)->lookup(ip("1.1.1.1")), Asn{1});
  EXPECT_EQ(s.select(2000)->lookup(ip("1.1.1.1")), Asn{2});
  EXPECT_EQ(s.select(99999)->lookup(ip("1.1.1.1")), Asn{2});
  EXPECT_THROW(s.add(2000, OriginTable{}), ValidationError);
}

TEST(Enrichment, SyntheticTablesResolveAsDocumented) {
  auto e = testing::synthetic_enrichment();
  const auto& codes = testing::toy_codes();
  auto home = e.resolve(ip("3.1.0.1"), 0);
  EXPECT_EQ(home.phys_country, codes[2]);
  EXPECT_EQ(home.asn, Asn{300});
  EXPECT_EQ(home.legal_country, codes[2]);
  auto abroad = e.resolve(ip("3.2.0.1"), 0);
  EXPECT_EQ(abroad.asn, Asn{350});
  EXPECT_EQ(abroad.legal_country, codes[3]);
  auto bare = e.resolve(ip("3.3.0.1"), 0);
  EXPECT_EQ(bare.phys_country, codes[2]);
  EXPECT_FALSE(bare.asn);
  EXPECT_FALSE(e.locate(ip("7.0.0.1")));
  EXPECT_FALSE(e.locate(ip("192.168.0.1")));
}

}  // namespace
}  // namespace geoexpose
