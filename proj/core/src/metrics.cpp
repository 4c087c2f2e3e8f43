#include "geoexpose/metrics.hpp"

#include <openssl/evp.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <memory>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "geoexpose/error.hpp"

namespace geoexpose {

std::optional<double> don(std::uint64_t normal, std::uint64_t total) noexcept {
  if (total == 0) return std::nullopt;
  return static_cast<double>(normal) / static_cast<double>(total);
}

std::string_view to_string(Role r) noexcept {
  switch (r) {
    case Role::source: return "source";
    case Role::transit: return "transit";
    case Role::destination: return "destination";
  }
  return "unknown";
}

Tally RoleCounters::get(CountryCode c, Role r, Exposure e) const noexcept {
  auto it = cells_.find(c);
  return it == cells_.end() ? Tally{} : it->second[index_of(r)][index_of(e)];
}

RoleCounters& RoleCounters::merge(const RoleCounters& o) {
  for (const auto& [code, cell] : o.cells_) {
    auto& mine = cells_[code];
    for (std::size_t r = 0; r < 3; ++r) {
      for (std::size_t e = 0; e < 3; ++e) mine[r][e] += cell[r][e];
    }
  }
  return *this;
}

BenefactorTally& BenefactorTally::operator+=(const BenefactorTally& o) noexcept {
  benefited_paths += o.benefited_paths;
  transited_paths += o.transited_paths;
  transit_only_paths += o.transit_only_paths;
  transit_only_normal += o.transit_only_normal;
  return *this;
}

BenefactorTally BenefactorCounters::get(CountryCode c, Exposure e) const noexcept {
  auto it = cells_.find(c);
  return it == cells_.end() ? BenefactorTally{} : it->second[index_of(e)];
}

BenefactorCounters& BenefactorCounters::merge(const BenefactorCounters& o) {
  for (const auto& [code, cell] : o.cells_) {
    auto& mine = cells_[code];
    for (std::size_t e = 0; e < 3; ++e) mine[e] += cell[e];
  }
  return *this;
}

Histograms& Histograms::merge(const Histograms& o) {
  for (const auto& [k, v] : o.severity) severity[k] += v;
  for (const auto& [k, v] : o.tuple_len_don) tuple_len_don[k] += v;
  for (const auto& [k, v] : o.as_count_don) as_count_don[k] += v;
  for (const auto& [k, v] : o.union_added) union_added[k] += v;
  return *this;
}

RegionMatrix& RegionMatrix::merge(const RegionMatrix& o) noexcept {
  for (std::size_t s = 0; s < 5; ++s) {
    for (std::size_t d = 0; d < 5; ++d) {
      for (std::size_t e = 0; e < 3; ++e) cells[s][d][e] += o.cells[s][d][e];
    }
  }
  return *this;
}

Aggregate& Aggregate::merge(const Aggregate& o) {
  for (std::size_t e = 0; e < 3; ++e) global[e] += o.global[e];
  unclassifiable_paths += o.unclassifiable_paths;
  roles.merge(o.roles);
  benefactors.merge(o.benefactors);
  histograms.merge(o.histograms);
  regions.merge(o.regions);
  for (std::size_t g = 0; g < 5; ++g) {
    for (std::size_t r = 0; r < 3; ++r) {
      for (std::size_t e = 0; e < 3; ++e) region_roles[g][r][e] += o.region_roles[g][r][e];
    }
  }
  skips.merge(o.skips);
  return *this;
}

namespace {

Region endpoint_region(const WorldModel& world, CountryCode c) {
  auto r = world.region_of(c);
  if (!r) throw UnknownCountry(c.str(), "country '" + c.str() + "' has no region");
  return *r;
}

std::vector<CountryCode> path_countries(const TuplePath& tp, Exposure e) {
  std::set<CountryCode> out;
  for (const auto& h : tp.hops) {
    if (e != Exposure::legal) out.insert(h.phys_country);
    if (e != Exposure::physical && h.legal_country) out.insert(*h.legal_country);
  }
  return {out.begin(), out.end()};
}

}  // namespace

void accumulate(Aggregate& agg, const TuplePath& tp, const PathClassification& pc,
                const WorldModel& world) {
  const Region src_region = endpoint_region(world, tp.src_country);
  const Region dst_region = endpoint_region(world, tp.dst_country);

  for (Exposure e : kAllExposures) {
    const PathVerdict& v = pc.verdict(e);
    const std::size_t ei = index_of(e);
    agg.global[ei].add(v.normal);
    agg.regions.at(src_region, dst_region, e).add(v.normal);

    agg.roles.add(tp.src_country, Role::source, e, v.normal);
    agg.roles.add(tp.dst_country, Role::destination, e, v.normal);
    agg.region_roles[index_of(src_region)][index_of(Role::source)][ei].add(v.normal);
    agg.region_roles[index_of(dst_region)][index_of(Role::destination)][ei].add(v.normal);

    std::set<Region> transit_regions;
    for (CountryCode c : path_countries(tp, e)) {
      auto& b = agg.benefactors.at(c, e);
      ++b.transited_paths;
      if (c == tp.src_country || c == tp.dst_country) continue;
      ++b.transit_only_paths;
      b.transit_only_normal += v.normal ? 1 : 0;
      agg.roles.add(c, Role::transit, e, v.normal);
      if (auto r = world.region_of(c)) transit_regions.insert(*r);
    }
    for (Region r : transit_regions) {
      agg.region_roles[index_of(r)][index_of(Role::transit)][ei].add(v.normal);
    }
    for (CountryCode c : v.benefactors) ++agg.benefactors.at(c, e).benefited_paths;
  }

  if (pc.unclassifiable) ++agg.unclassifiable_paths;
  auto& h = agg.histograms;
  ++h.severity[pc.physical.benefactors.size()];
  h.tuple_len_don[pc.tuple_len].add(pc.physical.normal);
  h.as_count_don[pc.as_count].add(pc.physical.normal);
  ++h.union_added[pc.union_added_countries];
}

namespace {

using json = nlohmann::json;

json tally_json(const Tally& t) {
  json j = {{"normal", t.normal}, {"total", t.total}};
  if (auto d = don(t)) j["don"] = *d;
  return j;
}

double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::string exposure_key(Exposure e) { return std::string(to_string(e)); }

/// Countries with a nonzero `count`, largest first, ties by iso2.
std::vector<CountryCode> ranked(const BenefactorCounters& b, Exposure e,
                                const std::function<std::uint64_t(const BenefactorTally&)>& count,
                                std::size_t top_n) {
  std::vector<std::pair<std::uint64_t, CountryCode>> rows;
  for (const auto& [code, cell] : b.cells()) {
    auto n = count(cell[index_of(e)]);
    if (n > 0) rows.emplace_back(n, code);
  }
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  if (rows.size() > top_n) rows.resize(top_n);
  std::vector<CountryCode> out;
  for (const auto& r : rows) out.push_back(r.second);
  return out;
}

struct Tables {
  json top_transit, top_transit_only, top_benefactors;
};

Tables build_tables(const Aggregate& agg, std::size_t top_n) {
  Tables t;
  for (Exposure e : kAllExposures) {
    const auto key = exposure_key(e);
    const std::uint64_t paths = agg.global[index_of(e)].total;

    json transit = json::array();
    for (CountryCode c : ranked(agg.benefactors, e,
                                [](const BenefactorTally& b) { return b.transited_paths; }, top_n)) {
      auto b = agg.benefactors.get(c, e);
      json row = {{"iso2", c.str()},
                  {"transited_paths", b.transited_paths},
                  {"ratio_of_paths", ratio(b.transited_paths, paths)}};
      if (auto d = don(agg.roles.get(c, Role::transit, e))) row["transit_don"] = *d;
      transit.push_back(std::move(row));
    }
    t.top_transit[key] = std::move(transit);

    json only = json::array();
    for (CountryCode c :
         ranked(agg.benefactors, e, [](const BenefactorTally& b) { return b.transit_only_paths; },
                top_n)) {
      auto b = agg.benefactors.get(c, e);
      json row = {{"iso2", c.str()},
                  {"transit_only_paths", b.transit_only_paths},
                  {"transited_paths", b.transited_paths},
                  {"transit_only_ratio", ratio(b.transit_only_paths, b.transited_paths)}};
      if (auto d = don(b.transit_only_normal, b.transit_only_paths)) row["transit_only_don"] = *d;
      only.push_back(std::move(row));
    }
    t.top_transit_only[key] = std::move(only);

    json bene = json::array();
    for (CountryCode c : ranked(agg.benefactors, e,
                                [](const BenefactorTally& b) { return b.benefited_paths; }, top_n)) {
      auto b = agg.benefactors.get(c, e);
      bene.push_back({{"iso2", c.str()},
                      {"benefited_paths", b.benefited_paths},
                      {"ratio_of_paths", ratio(b.benefited_paths, paths)},
                      {"benefited_per_transited", ratio(b.benefited_paths, b.transited_paths)}});
    }
    t.top_benefactors[key] = std::move(bene);
  }
  return t;
}

json build_report(const Aggregate& agg, const WorldModel& world, const ReportHeader& header,
                  std::size_t top_n) {
  json report;

  json inputs = json::array();
  for (const auto& in : header.inputs) {
    inputs.push_back({{"role", in.role}, {"file", in.file}, {"sha256", in.sha256}});
  }
  report["header"] = {{"tool", "geoexpose"}, {"config", header.config}, {"inputs", inputs}};

  json skips = json::object();
  for (SkipReason r : kAllSkipReasons) skips[std::string(to_string(r))] = agg.skips.count(r);
  report["summary"] = {{"classified_paths", agg.paths()},
                       {"skipped_records", agg.skips.total()},
                       {"unclassifiable_paths", agg.unclassifiable_paths},
                       {"skips", skips}};

  for (Exposure e : kAllExposures) {
    report["global"][exposure_key(e)] = tally_json(agg.global[index_of(e)]);
  }

  json countries = json::object();
  for (const auto& [code, cell] : agg.roles.cells()) {
    json c;
    for (Role r : kAllRoles) {
      for (Exposure e : kAllExposures) {
        const Tally& t = cell[index_of(r)][index_of(e)];
        if (t.total > 0) c[std::string(to_string(r))][exposure_key(e)] = tally_json(t);
      }
    }
    countries[code.str()] = std::move(c);
  }
  for (const auto& [code, cell] : agg.benefactors.cells()) {
    auto& c = countries[code.str()];
    for (Exposure e : kAllExposures) {
      const auto& b = cell[index_of(e)];
      if (b == BenefactorTally{}) continue;
      json j = {{"benefited_paths", b.benefited_paths},
                {"transited_paths", b.transited_paths},
                {"transit_only_paths", b.transit_only_paths},
                {"transit_only_normal", b.transit_only_normal}};
      if (b.transited_paths > 0) {
        j["benefited_per_transited"] = ratio(b.benefited_paths, b.transited_paths);
      }
      c["paths"][exposure_key(e)] = std::move(j);
    }
  }
  for (auto& [code, c] : countries.items()) {
    if (const auto* rec = world.find(*CountryCode::parse(code))) c["name"] = rec->name;
  }
  report["countries"] = std::move(countries);

  Tables tables = build_tables(agg, top_n);
  report["top_transit"] = std::move(tables.top_transit);
  report["top_transit_only"] = std::move(tables.top_transit_only);
  report["top_benefactors"] = std::move(tables.top_benefactors);

  json regions = json::object();
  json matrix = json::object();
  for (Region g : kAllRegions) {
    const std::string name(to_string(g));
    for (Role r : kAllRoles) {
      for (Exposure e : kAllExposures) {
        regions[name][std::string(to_string(r))][exposure_key(e)] =
            tally_json(agg.region_roles[index_of(g)][index_of(r)][index_of(e)]);
      }
    }
    for (Region d : kAllRegions) {
      for (Exposure e : kAllExposures) {
        matrix[exposure_key(e)][name][std::string(to_string(d))] =
            tally_json(agg.regions.at(g, d, e));
      }
    }
  }
  report["regions"] = std::move(regions);
  report["region_matrix"] = std::move(matrix);

  const auto& h = agg.histograms;
  json hist;
  hist["severity"] = json::array();
  for (const auto& [k, v] : h.severity) hist["severity"].push_back({{"benefactors", k}, {"paths", v}});
  hist["tuple_len_don"] = json::array();
  for (const auto& [k, t] : h.tuple_len_don) {
    json row = tally_json(t);
    row["tuple_len"] = k;
    hist["tuple_len_don"].push_back(std::move(row));
  }
  hist["as_count_don"] = json::array();
  for (const auto& [k, t] : h.as_count_don) {
    json row = tally_json(t);
    row["as_count"] = k;
    hist["as_count_don"].push_back(std::move(row));
  }
  hist["union_added"] = json::array();
  for (const auto& [k, v] : h.union_added) {
    hist["union_added"].push_back({{"added_countries", k}, {"paths", v}});
  }
  report["histograms"] = std::move(hist);
  return report;
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string fmt_don(const Tally& t) {
  auto d = don(t);
  return d ? fmt_double(*d) : std::string();
}

using FileMap = std::map<std::string, std::string>;  // relative path -> contents

void add_csv_files(FileMap& files, const Aggregate& agg, std::size_t top_n) {
  {
    std::ostringstream os;
    os << "iso2,role,exposure,normal,total,don\n";
    for (const auto& [code, cell] : agg.roles.cells()) {
      for (Role r : kAllRoles) {
        for (Exposure e : kAllExposures) {
          const Tally& t = cell[index_of(r)][index_of(e)];
          if (t.total == 0) continue;
          os << code.view() << ',' << to_string(r) << ',' << to_string(e) << ',' << t.normal << ','
             << t.total << ',' << fmt_don(t) << '\n';
        }
      }
    }
    files["tables/country_roles.csv"] = os.str();
  }
  {
    std::ostringstream os;
    os << "iso2,exposure,benefited_paths,transited_paths,transit_only_paths,transit_only_normal\n";
    for (const auto& [code, cell] : agg.benefactors.cells()) {
      for (Exposure e : kAllExposures) {
        const auto& b = cell[index_of(e)];
        if (b == BenefactorTally{}) continue;
        os << code.view() << ',' << to_string(e) << ',' << b.benefited_paths << ','
           << b.transited_paths << ',' << b.transit_only_paths << ',' << b.transit_only_normal
           << '\n';
      }
    }
    files["tables/country_paths.csv"] = os.str();
  }
  for (Exposure e : kAllExposures) {
    const std::string suffix = "_" + exposure_key(e) + ".csv";
    const std::uint64_t paths = agg.global[index_of(e)].total;
    {
      std::ostringstream os;
      os << "rank,iso2,transited_paths,ratio_of_paths,transit_don\n";
      std::size_t rank = 0;
      for (CountryCode c : ranked(agg.benefactors, e,
                                  [](const BenefactorTally& b) { return b.transited_paths; },
                                  top_n)) {
        auto b = agg.benefactors.get(c, e);
        os << ++rank << ',' << c.view() << ',' << b.transited_paths << ','
           << fmt_double(ratio(b.transited_paths, paths)) << ','
           << fmt_don(agg.roles.get(c, Role::transit, e)) << '\n';
      }
      files["tables/top_transit" + suffix] = os.str();
    }
    {
      std::ostringstream os;
      os << "rank,iso2,transit_only_paths,transited_paths,transit_only_ratio,transit_only_don\n";
      std::size_t rank = 0;
      for (CountryCode c : ranked(agg.benefactors, e,
                                  [](const BenefactorTally& b) { return b.transit_only_paths; },
                                  top_n)) {
        auto b = agg.benefactors.get(c, e);
        os << ++rank << ',' << c.view() << ',' << b.transit_only_paths << ','
           << b.transited_paths << ',' << fmt_double(ratio(b.transit_only_paths, b.transited_paths))
           << ',' << fmt_don(Tally{b.transit_only_normal, b.transit_only_paths}) << '\n';
      }
      files["tables/top_transit_only" + suffix] = os.str();
    }
    {
      std::ostringstream os;
      os << "rank,iso2,benefited_paths,ratio_of_paths,benefited_per_transited\n";
      std::size_t rank = 0;
      for (CountryCode c : ranked(agg.benefactors, e,
                                  [](const BenefactorTally& b) { return b.benefited_paths; },
                                  top_n)) {
        auto b = agg.benefactors.get(c, e);
        os << ++rank << ',' << c.view() << ',' << b.benefited_paths << ','
           << fmt_double(ratio(b.benefited_paths, paths)) << ','
           << fmt_double(ratio(b.benefited_paths, b.transited_paths)) << '\n';
      }
      files["tables/top_benefactors" + suffix] = os.str();
    }
  }
  {
    std::ostringstream os;
    os << "region,role,exposure,normal,total,don\n";
    for (Region g : kAllRegions) {
      for (Role r : kAllRoles) {
        for (Exposure e : kAllExposures) {
          const Tally& t = agg.region_roles[index_of(g)][index_of(r)][index_of(e)];
          os << to_string(g) << ',' << to_string(r) << ',' << to_string(e) << ',' << t.normal
             << ',' << t.total << ',' << fmt_don(t) << '\n';
        }
      }
    }
    files["tables/region_roles.csv"] = os.str();
  }
  {
    std::ostringstream os;
    os << "exposure,src_region,dst_region,normal,total,don\n";
    for (Exposure e : kAllExposures) {
      for (Region s : kAllRegions) {
        for (Region d : kAllRegions) {
          const Tally& t = agg.regions.at(s, d, e);
          os << to_string(e) << ',' << to_string(s) << ',' << to_string(d) << ',' << t.normal
             << ',' << t.total << ',' << fmt_don(t) << '\n';
        }
      }
    }
    files["tables/region_matrix.csv"] = os.str();
  }
}

void add_plot_files(FileMap& files, const Aggregate& agg) {
  const auto& h = agg.histograms;
  auto counts = [](const char* head, const std::map<std::size_t, std::uint64_t>& m) {
    std::ostringstream os;
    os << head << '\n';
    for (const auto& [k, v] : m) os << k << ',' << v << '\n';
    return os.str();
  };
  auto dons = [](const char* head, const std::map<std::size_t, Tally>& m) {
    std::ostringstream os;
    os << head << '\n';
    for (const auto& [k, t] : m) os << k << ',' << fmt_don(t) << '\n';
    return os.str();
  };
  files["plots/severity.csv"] = counts("benefactors,paths", h.severity);
  files["plots/union_added.csv"] = counts("added_countries,paths", h.union_added);
  files["plots/tuple_len_don.csv"] = dons("tuple_len,don", h.tuple_len_don);
  files["plots/as_count_don.csv"] = dons("as_count,don", h.as_count_don);

  // Empirical CDF of per-country DoN for each role and exposure.
  for (Role r : kAllRoles) {
    for (Exposure e : kAllExposures) {
      std::vector<double> values;
      for (const auto& [code, cell] : agg.roles.cells()) {
        if (auto d = don(cell[index_of(r)][index_of(e)])) values.push_back(*d);
      }
      std::sort(values.begin(), values.end());
      std::ostringstream os;
      os << "don,fraction\n";
      for (std::size_t i = 0; i < values.size(); ++i) {
        if (i + 1 < values.size() && values[i + 1] == values[i]) continue;
        os << fmt_double(values[i]) << ','
           << fmt_double(static_cast<double>(i + 1) / static_cast<double>(values.size())) << '\n';
      }
      files["plots/cdf_" + std::string(to_string(r)) + "_" + exposure_key(e) + ".csv"] = os.str();
    }
  }
}

}  // namespace

std::string report_json(const Aggregate& agg, const WorldModel& world, const ReportHeader& header,
                        std::size_t top_n) {
  return build_report(agg, world, header, top_n).dump(2) + "\n";
}

std::vector<std::filesystem::path> write_report(const std::filesystem::path& dir,
                                                const Aggregate& agg, const WorldModel& world,
                                                const ReportHeader& header, std::size_t top_n) {
  namespace fs = std::filesystem;
  FileMap files;
  files["report.json"] = report_json(agg, world, header, top_n);
  add_csv_files(files, agg, top_n);
  add_plot_files(files, agg);

  fs::create_directories(dir);
  const fs::path staging = dir / (".staging-" + std::to_string(::getpid()));
  fs::remove_all(staging);
  std::vector<fs::path> written;
  try {
    for (const auto& [rel, body] : files) {
      fs::path p = staging / rel;
      fs::create_directories(p.parent_path());
      std::ofstream out(p, std::ios::binary);
      out << body;
      out.close();
      if (!out) throw Error("cannot write " + p.string());
    }
    for (const auto& [rel, body] : files) {
      fs::path target = dir / rel;
      fs::create_directories(target.parent_path());
      fs::rename(staging / rel, target);
      written.push_back(target);
    }
  } catch (...) {
    std::error_code ec;
    fs::remove_all(staging, ec);
    throw;
  }
  fs::remove_all(staging);
  return written;
}

std::string sha256_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ParseError(file.string(), 0, "cannot open file");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 unavailable");
  }
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  static const char* kHex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 0xF]);
  }
  return out;
}

}  // namespace geoexpose
