#include <fstream>
#include <random>
#include <set>

#include <gmock/gmock.h>
#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "geoexpose/error.hpp"
#include "geoexpose/metrics.hpp"
#include "synthetic.hpp"

namespace geoexpose {
namespace {

using json = nlohmann::json;
using ::testing::HasSubstr;

CountryCode cc(const char* s) { return CountryCode::of(s); }

TupleHop hop(const char* country, std::uint32_t asn, const char* legal = nullptr) {
  return TupleHop{cc(country), Asn{asn}, legal ? std::optional(cc(legal)) : std::nullopt};
}

TEST(Don, Arithmetic) {
  EXPECT_DOUBLE_EQ(*don(3, 4), 0.75);
  EXPECT_DOUBLE_EQ(*don(0, 7), 0.0);
  EXPECT_FALSE(don(0, 0).has_value());
  EXPECT_DOUBLE_EQ(*don(Tally{5, 5}), 1.0);
}

WorldModel five_countries() {
  std::vector<CountryRecord> recs;
  auto add = [&](const char* code, Region r, double lat, double lon) {
    recs.push_back({cc(code), code, r, {{"capital", GeoPoint(lat, lon), 1000}}});
  };
  add("US", Region::americas, 38.9, -77.0);
  add("CA", Region::americas, 45.4, -75.7);
  add("FR", Region::europe, 48.9, 2.35);
  add("ES", Region::europe, 40.4, -3.7);
  add("GB", Region::europe, 51.5, -0.1);
  return WorldModel(std::move(recs), {});
}

PathVerdict verdict(bool normal, std::vector<CountryCode> benefactors = {}) {
  return PathVerdict{normal, std::move(benefactors)};
}

PathClassification same_verdicts(const PathVerdict& v, std::size_t len, std::size_t ases) {
  PathClassification pc;
  pc.physical = pc.legal = pc.union_ = v;
  pc.tuple_len = len;
  pc.as_count = ases;
  return pc;
}

TEST(Accumulate, NormalPathCountsEndpointsOnly) {
  auto w = five_countries();
  Aggregate agg;
  TuplePath tp{cc("US"), cc("CA"), {hop("US", 1, "US"), hop("CA", 2, "CA")}, 0, 0, 2};
  accumulate(agg, tp, same_verdicts(verdict(true), 2, 2), w);
  for (Exposure e : kAllExposures) {
    EXPECT_EQ(agg.roles.get(cc("US"), Role::source, e), (Tally{1, 1}));
    EXPECT_EQ(agg.roles.get(cc("CA"), Role::destination, e), (Tally{1, 1}));
    EXPECT_EQ(agg.roles.get(cc("US"), Role::transit, e), (Tally{0, 0}));
    EXPECT_EQ(agg.roles.get(cc("CA"), Role::transit, e), (Tally{0, 0}));
    EXPECT_EQ(agg.global[index_of(e)], (Tally{1, 1}));
  }
  EXPECT_EQ(agg.histograms.severity.at(0), 1u);
  EXPECT_EQ(agg.regions.at(Region::americas, Region::americas, Exposure::physical), (Tally{1, 1}));
}

TEST(Accumulate, DetourThroughThirdCountry) {
  auto w = five_countries();
  Aggregate agg;
  TuplePath tp{cc("FR"), cc("ES"), {hop("FR", 1, "FR"), hop("GB", 2, "GB"), hop("ES", 3, "ES")}, 0, 0, 3};
  accumulate(agg, tp, same_verdicts(verdict(false, {cc("GB")}), 3, 3), w);
  const auto e = Exposure::physical;
  EXPECT_EQ(agg.roles.get(cc("GB"), Role::transit, e), (Tally{0, 1}));
  auto b = agg.benefactors.get(cc("GB"), e);
  EXPECT_EQ(b.benefited_paths, 1u);
  EXPECT_EQ(b.transit_only_paths, 1u);
  EXPECT_EQ(b.transit_only_normal, 0u);
  EXPECT_EQ(b.transited_paths, 1u);
  EXPECT_EQ(agg.histograms.severity.at(1), 1u);
  EXPECT_EQ(agg.benefactors.get(cc("FR"), e).transited_paths, 1u);
  EXPECT_EQ(agg.benefactors.get(cc("FR"), e).transit_only_paths, 0u);
  EXPECT_EQ(agg.roles.get(cc("FR"), Role::source, e), (Tally{0, 1}));
}

TEST(Accumulate, RevisitedCountryCountsOncePerPath) {
  auto w = five_countries();
  Aggregate agg;
  TuplePath tp{cc("FR"), cc("ES"),
               {hop("FR", 1), hop("GB", 2), hop("FR", 1), hop("GB", 2), hop("ES", 3)}, 0, 0, 5};
  accumulate(agg, tp, same_verdicts(verdict(false, {cc("GB")}), 5, 3), w);
  EXPECT_EQ(agg.roles.get(cc("GB"), Role::transit, Exposure::physical), (Tally{0, 1}));
  EXPECT_EQ(agg.roles.get(cc("FR"), Role::transit, Exposure::physical), (Tally{0, 0}));
  EXPECT_EQ(agg.region_roles[index_of(Region::europe)][index_of(Role::transit)][0], (Tally{0, 1}));
}

TEST(Accumulate, EndpointWithoutRegionThrows) {
  auto w = five_countries();
  Aggregate agg;
  TuplePath tp{cc("US"), cc("ZZ"), {}, 0, 0, 0};
  EXPECT_THROW(accumulate(agg, tp, same_verdicts(verdict(true), 0, 0), w), UnknownCountry);
}

struct ToyRun {
  LoadedWorld world = testing::load_toy_world();
  std::vector<ProcessedPath> paths;
  SkipLog skips;
  Aggregate agg;

  ToyRun() {
    auto dir = testing::toy_dir();
    Enrichment e{load_geo_table(dir / "geo.csv"),
                 OriginSnapshots(load_origin_table(dir / "origin.csv")),
                 load_as_registry(dir / "registry.csv")};
    std::ifstream in(dir / "traceroutes.jsonl");
    std::vector<TracerouteRecord> recs;
    std::string line;
    while (std::getline(in, line)) recs.push_back(parse_traceroute(line));
    PairCache cache(world.world);
    paths = process_stream(recs, e, cache, PipelineOptions{}, skips);
    for (const auto& [tp, pc] : paths) accumulate(agg, tp, pc, world.world);
    agg.skips.merge(skips);
  }
};

const ToyRun& toy_run() {
  static const ToyRun run;
  return run;
}

/// "n/t" per exposure (physical, legal, union); "-" is an empty tally.
std::array<Tally, 3> tallies(const char* p, const char* l, const char* u) {
  auto one = [](std::string s) {
    if (s == "-") return Tally{0, 0};
    auto slash = s.find('/');
    return Tally{std::stoull(s.substr(0, slash)), std::stoull(s.substr(slash + 1))};
  };
  return {one(p), one(l), one(u)};
}

TEST(ToyAggregate, RoleCountersMatchHandTable) {
  const auto& agg = toy_run().agg;
  struct Row {
    const char* code;
    Role role;
    std::array<Tally, 3> want;
  };
  const Row rows[] = {
      {"AA", Role::source, tallies("1/2", "1/2", "1/2")},
      {"AA", Role::transit, tallies("0/1", "0/1", "0/1")},
      {"AA", Role::destination, tallies("1/1", "1/1", "1/1")},
      {"BB", Role::source, tallies("0/1", "0/1", "0/1")},
      {"BB", Role::transit, tallies("1/1", "1/1", "1/1")},
      {"BB", Role::destination, tallies("0/1", "0/1", "0/1")},
      {"CC", Role::source, tallies("2/2", "1/2", "1/2")},
      {"CC", Role::transit, tallies("1/2", "1/2", "1/2")},
      {"CC", Role::destination, tallies("1/4", "2/4", "1/4")},
      {"DD", Role::source, tallies("1/2", "1/2", "1/2")},
      {"DD", Role::transit, tallies("0/1", "-", "0/1")},
      {"DD", Role::destination, tallies("2/2", "1/2", "1/2")},
      {"EE", Role::source, tallies("1/3", "2/3", "1/3")},
      {"EE", Role::transit, tallies("0/1", "0/2", "0/2")},
      {"EE", Role::destination, tallies("-", "-", "-")},
      {"FF", Role::source, tallies("-", "-", "-")},
      {"FF", Role::transit, tallies("0/1", "0/1", "0/1")},
      {"FF", Role::destination, tallies("1/2", "1/2", "1/2")},
  };
  for (const auto& r : rows) {
    for (Exposure e : kAllExposures) {
      EXPECT_EQ(agg.roles.get(cc(r.code), r.role, e), r.want[index_of(e)])
          << r.code << " " << to_string(r.role) << " " << to_string(e);
    }
  }
}

TEST(ToyAggregate, PathCountersMatchHandTable) {
  const auto& agg = toy_run().agg;
  struct Row {
    const char* code;
    std::array<std::uint64_t, 3> benefited, transited;
    std::array<Tally, 3> transit_only;
  };
  const Row rows[] = {
      {"AA", {1, 1, 1}, {4, 4, 4}, tallies("0/1", "0/1", "0/1")},
      {"BB", {0, 0, 0}, {2, 2, 2}, tallies("1/1", "1/1", "1/1")},
      {"CC", {1, 1, 1}, {8, 8, 8}, tallies("1/2", "1/2", "1/2")},
      {"DD", {1, 0, 1}, {5, 4, 5}, tallies("0/1", "-", "0/1")},
      {"EE", {1, 2, 2}, {3, 4, 4}, tallies("0/1", "0/2", "0/2")},
      {"FF", {1, 1, 1}, {2, 2, 2}, tallies("0/1", "0/1", "0/1")},
  };
  for (const auto& r : rows) {
    for (Exposure e : kAllExposures) {
      SCOPED_TRACE(std::string(r.code) + " " + std::string(to_string(e)));
      auto b = agg.benefactors.get(cc(r.code), e);
      std::size_t i = index_of(e);
      EXPECT_EQ(b.benefited_paths, r.benefited[i]);
      EXPECT_EQ(b.transited_paths, r.transited[i]);
      EXPECT_EQ((Tally{b.transit_only_normal, b.transit_only_paths}), r.transit_only[i]);
    }
  }
}

TEST(ToyAggregate, GlobalHistogramsAndSkips) {
  const auto& agg = toy_run().agg;
  EXPECT_EQ(agg.global[0], (Tally{5, 10}));
  EXPECT_EQ(agg.global[1], (Tally{5, 10}));
  EXPECT_EQ(agg.global[2], (Tally{4, 10}));
  const auto& h = agg.histograms;
  EXPECT_EQ(h.severity, (std::map<std::size_t, std::uint64_t>{{0, 5}, {1, 5}}));
  EXPECT_EQ(h.tuple_len_don, (std::map<std::size_t, Tally>{{0, {1, 1}}, {2, {1, 1}}, {3, {3, 8}}}));
  EXPECT_EQ(h.as_count_don, (std::map<std::size_t, Tally>{{0, {1, 1}}, {2, {1, 2}}, {3, {3, 7}}}));
  EXPECT_EQ(h.union_added, (std::map<std::size_t, std::uint64_t>{{0, 9}, {1, 1}}));
  EXPECT_EQ(agg.skips.count(SkipReason::unresolved_source), 1u);
  EXPECT_EQ(agg.skips.count(SkipReason::unresolved_destination), 1u);
  EXPECT_EQ(agg.unclassifiable_paths, 0u);
}

TEST(ToyAggregate, RegionMatrixMatchesHandTable) {
  const auto& agg = toy_run().agg;
  using R = Region;
  struct Row {
    R src, dst;
    std::array<Tally, 3> want;
  };
  const Row rows[] = {
      {R::americas, R::europe, tallies("1/2", "1/2", "1/2")},
      {R::americas, R::americas, tallies("0/1", "0/1", "0/1")},
      {R::europe, R::europe, tallies("2/3", "1/3", "1/3")},
      {R::europe, R::americas, tallies("1/1", "1/1", "1/1")},
      {R::africa, R::africa, tallies("1/2", "1/2", "1/2")},
      {R::africa, R::europe, tallies("0/1", "1/1", "0/1")},
  };
  std::uint64_t listed = 0;
  for (const auto& r : rows) {
    for (Exposure e : kAllExposures) {
      EXPECT_EQ(agg.regions.at(r.src, r.dst, e), r.want[index_of(e)])
          << to_string(r.src) << ">" << to_string(r.dst) << " " << to_string(e);
    }
    listed += r.want[0].total;
  }
  EXPECT_EQ(listed, 10u);  // every other cell is empty
}

/// Recounts benefited paths and per-region roles straight from the
/// classified paths.
TEST(ToyAggregate, BruteForceRecountAgrees) {
  const auto& run = toy_run();
  const auto& w = run.world.world;
  for (Exposure e : kAllExposures) {
    std::map<CountryCode, std::uint64_t> benefited;
    std::array<std::array<Tally, 3>, 5> region_roles{};
    for (const auto& [tp, pc] : run.paths) {
      const auto& v = pc.verdict(e);
      for (auto c : v.benefactors) ++benefited[c];
      region_roles[index_of(*w.region_of(tp.src_country))][0].add(v.normal);
      region_roles[index_of(*w.region_of(tp.dst_country))][2].add(v.normal);
      std::set<Region> seen;
      for (const auto& h : tp.hops) {
        std::vector<CountryCode> cs;
        if (e != Exposure::legal) cs.push_back(h.phys_country);
        if (e != Exposure::physical && h.legal_country) cs.push_back(*h.legal_country);
        for (auto c : cs) {
          if (c != tp.src_country && c != tp.dst_country) seen.insert(*w.region_of(c));
        }
      }
      for (auto r : seen) region_roles[index_of(r)][1].add(v.normal);
    }
    for (auto code : testing::toy_codes()) {
      EXPECT_EQ(run.agg.benefactors.get(code, e).benefited_paths, benefited[code]);
    }
    for (Region r : kAllRegions) {
      for (Role role : kAllRoles) {
        EXPECT_EQ(run.agg.region_roles[index_of(r)][index_of(role)][index_of(e)],
                  region_roles[index_of(r)][index_of(role)]);
      }
    }
  }
}

TEST(Aggregate, InvariantsOnRandomPaths) {
  auto world = testing::load_toy_world();
  auto e = testing::synthetic_enrichment();
  PairCache cache(world.world);
  std::mt19937_64 rng(61);
  auto recs = testing::random_records(rng, 3000);
  SkipLog skips;
  Aggregate agg;
  for (const auto& [tp, pc] : process_stream(recs, e, cache, PipelineOptions{}, skips)) {
    accumulate(agg, tp, pc, world.world);
  }
  ASSERT_GT(agg.paths(), 0u);
  std::uint64_t sev = 0;
  for (auto [k, n] : agg.histograms.severity) sev += n;
  EXPECT_EQ(sev, agg.paths());
  EXPECT_EQ(agg.histograms.severity[0], agg.global[0].normal);
  EXPECT_LE(*don(agg.global[2]), *don(agg.global[0]));
  for (const auto& [code, cell] : agg.roles.cells()) {
    for (const auto& row : cell) {
      for (const auto& t : row) {
        EXPECT_LE(t.normal, t.total);
        if (auto d = don(t)) {
          EXPECT_GE(*d, 0.0);
          EXPECT_LE(*d, 1.0);
        }
      }
    }
  }
}

std::vector<Aggregate> random_partials(std::uint64_t seed, std::size_t parts, std::size_t per) {
  static const LoadedWorld world = testing::load_toy_world();
  static const Enrichment e = testing::synthetic_enrichment();
  PairCache cache(world.world);
  std::mt19937_64 rng(seed);
  std::vector<Aggregate> out(parts);
  for (auto& agg : out) {
    SkipLog skips;
    auto recs = testing::random_records(rng, per);
    for (const auto& [tp, pc] : process_stream(recs, e, cache, PipelineOptions{}, skips)) {
      accumulate(agg, tp, pc, world.world);
    }
    agg.skips.merge(skips);
  }
  return out;
}

TEST(Aggregate, MergeEqualsSequentialAccumulation) {
  static const LoadedWorld world = testing::load_toy_world();
  const Enrichment e = testing::synthetic_enrichment();
  PairCache cache(world.world);
  std::mt19937_64 rng(67);
  auto recs = testing::random_records(rng, 2000);
  SkipLog skips;
  auto paths = process_stream(recs, e, cache, PipelineOptions{}, skips);
  Aggregate serial, left, right;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    accumulate(serial, paths[i].path, paths[i].classification, world.world);
    accumulate(i % 3 == 0 ? left : right, paths[i].path, paths[i].classification, world.world);
  }
  Aggregate merged;
  merged.merge(left).merge(right);
  EXPECT_EQ(merged, serial);
}

TEST(Aggregate, MergeIsCommutativeAssociativeWithIdentity) {
  auto p = random_partials(71, 3, 400);
  Aggregate ab = p[0];
  ab.merge(p[1]);
  Aggregate ba = p[1];
  ba.merge(p[0]);
  EXPECT_EQ(ab, ba);

  Aggregate ab_c = ab;
  ab_c.merge(p[2]);
  Aggregate bc = p[1];
  bc.merge(p[2]);
  Aggregate a_bc = p[0];
  a_bc.merge(bc);
  EXPECT_EQ(ab_c, a_bc);

  Aggregate with_identity = p[0];
  with_identity.merge(Aggregate{});
  EXPECT_EQ(with_identity, p[0]);
  Aggregate from_identity;
  from_identity.merge(p[0]);
  EXPECT_EQ(from_identity, p[0]);
}

ReportHeader header() {
  ReportHeader h;
  h.inputs.push_back({"traceroutes", "t.jsonl", "00"});
  h.config["mode"] = "population";
  return h;
}

TEST(Report, AllNormalFixture) {
  auto w = five_countries();
  Aggregate agg;
  TuplePath tp{cc("US"), cc("CA"), {hop("US", 1, "US"), hop("CA", 2, "CA")}, 0, 0, 2};
  for (int i = 0; i < 3; ++i) accumulate(agg, tp, same_verdicts(verdict(true), 2, 2), w);
  auto j = json::parse(report_json(agg, w, header(), 10));
  for (const char* e : {"physical", "legal", "union"}) {
    EXPECT_DOUBLE_EQ(j["global"][e]["don"].get<double>(), 1.0);
    EXPECT_TRUE(j["top_benefactors"][e].empty()) << e;
  }
}

TEST(Report, HalfNormalFixtureAndAbsentDon) {
  auto w = five_countries();
  Aggregate agg;
  TuplePath direct{cc("FR"), cc("ES"), {hop("FR", 1), hop("ES", 3)}, 0, 0, 2};
  TuplePath detour{cc("FR"), cc("ES"), {hop("FR", 1), hop("GB", 2), hop("ES", 3)}, 0, 0, 3};
  accumulate(agg, direct, same_verdicts(verdict(true), 2, 2), w);
  accumulate(agg, direct, same_verdicts(verdict(true), 2, 2), w);
  accumulate(agg, detour, same_verdicts(verdict(false, {cc("GB")}), 3, 3), w);
  accumulate(agg, detour, same_verdicts(verdict(false, {cc("GB")}), 3, 3), w);
  auto text = report_json(agg, w, header(), 10);
  auto j = json::parse(text);
  EXPECT_DOUBLE_EQ(j["global"]["physical"]["don"].get<double>(), 0.5);
  // FR never appears as a destination: its tally has no don key at all.
  auto fr_dst = j["countries"]["FR"].value("destination", json::object());
  for (const auto& [exposure, t] : fr_dst.items()) EXPECT_FALSE(t.contains("don")) << exposure;
  EXPECT_EQ(j["top_benefactors"]["physical"][0]["iso2"], "GB");
  EXPECT_EQ(j["top_benefactors"]["physical"][0]["benefited_paths"], 2);
  EXPECT_EQ(text.back(), '\n');
  EXPECT_EQ(json::parse(text).dump(2) + "\n", text);  // keys already sorted
}

TEST(Report, TopNTiesBrokenByCode) {
  auto w = five_countries();
  Aggregate agg;
  TuplePath a{cc("FR"), cc("ES"), {hop("GB", 2)}, 0, 0, 1};
  TuplePath b{cc("FR"), cc("ES"), {hop("US", 2)}, 0, 0, 1};
  TuplePath c{cc("FR"), cc("ES"), {hop("CA", 2)}, 0, 0, 1};
  accumulate(agg, c, same_verdicts(verdict(false, {cc("CA")}), 1, 1), w);
  accumulate(agg, b, same_verdicts(verdict(false, {cc("US")}), 1, 1), w);
  accumulate(agg, b, same_verdicts(verdict(false, {cc("US")}), 1, 1), w);
  accumulate(agg, a, same_verdicts(verdict(false, {cc("GB")}), 1, 1), w);
  auto j = json::parse(report_json(agg, w, header(), 2));
  const auto& top = j["top_benefactors"]["physical"];
  ASSERT_EQ(top.size(), 2u);
  EXPECT_EQ(top[0]["iso2"], "US");
  EXPECT_EQ(top[1]["iso2"], "CA");
}

TEST(Report, WriteReportPlacesFilesAndLeavesNoStaging) {
  const auto& run = toy_run();
  testing::TempDir dir;
  auto out = dir.path() / "report";
  auto written = write_report(out, run.agg, run.world.world, header(), 10);
  EXPECT_GT(written.size(), 20u);
  for (const auto& p : written) EXPECT_TRUE(std::filesystem::exists(p)) << p;
  EXPECT_TRUE(std::filesystem::exists(out / "report.json"));
  EXPECT_TRUE(std::filesystem::exists(out / "tables" / "country_roles.csv"));
  EXPECT_TRUE(std::filesystem::exists(out / "plots" / "severity.csv"));
  for (const auto& entry : std::filesystem::directory_iterator(out)) {
    EXPECT_THAT(entry.path().filename().string(), ::testing::Not(HasSubstr("staging")));
  }
  EXPECT_EQ(testing::read_file(out / "plots" / "severity.csv"), "benefactors,paths\n0,5\n1,5\n");
  // A second write replaces the first in place.
  auto again = write_report(out, run.agg, run.world.world, header(), 10);
  EXPECT_EQ(again.size(), written.size());
}

TEST(Sha256, KnownDigests) {
  testing::TempDir dir;
  testing::write_file(dir.path() / "abc", "abc");
  EXPECT_EQ(sha256_file(dir.path() / "abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  testing::write_file(dir.path() / "empty", "");
  EXPECT_EQ(sha256_file(dir.path() / "empty"),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_THROW(sha256_file(dir.path() / "missing"), ParseError);
}

}  // namespace
}  // namespace geoexpose
