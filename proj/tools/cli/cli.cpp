#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "geoexpose/analysis.hpp"
#include "geoexpose/error.hpp"
#include "geoexpose/metrics.hpp"
#include "geoexpose/normality.hpp"
#include "geoexpose/world.hpp"

namespace geoexpose::cli {

namespace fs = std::filesystem;

OriginTableArg parse_origin_table_arg(const std::string& text) {
  auto at = text.rfind('@');
  if (at == std::string::npos) return {text, OriginSnapshots::kAlways};
  auto when = parse_utc_date(std::string_view(text).substr(at + 1));
  if (!when) {
    throw ValidationError("origin table '" + text + "': expected FILE@YYYY-MM-DD");
  }
  return {text.substr(0, at), *when};
}

void RunConfig::validate() const {
  if (workers < 1) throw ValidationError("--workers must be at least 1");
  if (!(boundary_step > 0.0)) throw ValidationError("--boundary-step must be positive");
  if (top_n < 1) throw ValidationError("--top-n must be at least 1");
  if (cities_per_country < 1) throw ValidationError("--cities-per-country must be at least 1");
}

std::vector<CountryCode> suggest_codes(std::string_view code, const std::vector<CountryCode>& known,
                                       std::size_t limit) {
  std::string upper(code);
  for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  auto distance = [&](CountryCode k) {
    auto v = k.view();
    std::size_t d = 0;
    for (std::size_t i = 0; i < 2; ++i) d += (i >= upper.size() || upper[i] != v[i]) ? 1 : 0;
    if (d == 2 && upper.size() == 2 && upper[0] == v[1] && upper[1] == v[0]) d = 1;
    return d;
  };
  std::vector<std::pair<std::size_t, CountryCode>> scored;
  for (CountryCode k : known) {
    if (auto d = distance(k); d < 2) scored.emplace_back(d, k);
  }
  std::sort(scored.begin(), scored.end());
  std::vector<CountryCode> out;
  for (const auto& [d, k] : scored) {
    if (out.size() == limit) break;
    out.push_back(k);
  }
  return out;
}

namespace {

void require_file(const fs::path& p, const char* flag) {
  if (p.empty()) throw ValidationError(std::string(flag) + " is required");
  if (!fs::is_regular_file(p)) {
    throw ValidationError("input file not found: " + p.string() + " (" + flag + ")");
  }
}

LoadedWorld load_world_from(const RunConfig& cfg) {
  require_file(cfg.cities, "--cities");
  require_file(cfg.borders, "--borders");
  require_file(cfg.regions, "--regions");
  WorldOptions options;
  options.cities_per_country = cfg.cities_per_country;
  return load_world(cfg.cities, cfg.borders, cfg.regions, options);
}

Enrichment load_enrichment(const RunConfig& cfg) {
  require_file(cfg.geo_table, "--geo-table");
  require_file(cfg.as_registry, "--as-registry");
  if (cfg.origin_tables.empty()) throw ValidationError("--origin-table is required");
  Enrichment e;
  e.geo = load_geo_table(cfg.geo_table);
  e.registry = load_as_registry(cfg.as_registry);
  for (const auto& text : cfg.origin_tables) {
    auto arg = parse_origin_table_arg(text);
    require_file(arg.file, "--origin-table");
    e.origins.add(arg.valid_from, load_origin_table(arg.file, cfg.moas));
  }
  return e;
}

CountryCode country_arg(const std::string& text, const WorldModel& world) {
  auto code = CountryCode::parse(text);
  if (code && world.has_record(*code)) return *code;
  std::vector<CountryCode> known;
  for (const auto& [k, rec] : world.countries()) known.push_back(k);
  std::string msg = "unknown country code '" + text + "'";
  auto near = suggest_codes(text, known);
  if (!near.empty()) {
    msg += "; did you mean";
    for (std::size_t i = 0; i < near.size(); ++i) {
      msg += (i == 0 ? " " : ", ") + near[i].str();
    }
    msg += "?";
  }
  throw UnknownCountry(text, msg);
}

std::string fmt_don(std::optional<double> d) {
  if (!d) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *d);
  return buf;
}

std::string join_codes(const std::vector<CountryCode>& codes) {
  if (codes.empty()) return "-";
  std::string out;
  for (const auto& c : codes) {
    if (!out.empty()) out += ' ';
    out += c.view();
  }
  return out;
}

std::string mode_label(const RunConfig& cfg) { return std::string(to_string(cfg.mode)); }

// analyze ------------------------------------------------------------------

int cmd_analyze(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  require_file(cfg.traceroutes, "--traceroutes");
  auto loaded = load_world_from(cfg);
  const WorldModel& world = loaded.world;
  Enrichment enrichment = load_enrichment(cfg);

  PairCache cache(world, NormalityOptions{cfg.boundary_step});
  AnalysisOptions options;
  options.pipeline = {cfg.mode, cfg.unclassifiable};
  options.workers = cfg.workers;
  Aggregate agg = analyze_file(cfg.traceroutes, enrichment, cache, options);

  ReportHeader header;
  auto digest = [&](const char* role, const fs::path& p) {
    header.inputs.push_back({role, p.filename().string(), sha256_file(p)});
  };
  digest("cities", cfg.cities);
  digest("borders", cfg.borders);
  digest("regions", cfg.regions);
  digest("geo_table", cfg.geo_table);
  for (const auto& text : cfg.origin_tables) digest("origin_table", parse_origin_table_arg(text).file);
  digest("as_registry", cfg.as_registry);
  digest("traceroutes", cfg.traceroutes);
  {
    char step[32];
    std::snprintf(step, sizeof step, "%g", cfg.boundary_step);
    header.config = {
        {"mode", mode_label(cfg)},
        {"boundary_step_deg", step},
        {"unclassifiable", std::string(to_string(cfg.unclassifiable))},
        {"top_n", std::to_string(cfg.top_n)},
        {"cities_per_country", std::to_string(cfg.cities_per_country)},
        {"moas", cfg.moas == MoasPolicy::error ? "error" : "first-wins"},
    };
    for (std::size_t i = 0; i < cfg.origin_tables.size(); ++i) {
      auto arg = parse_origin_table_arg(cfg.origin_tables[i]);
      if (arg.valid_from != OriginSnapshots::kAlways) {
        header.config["origin_table_" + std::to_string(i) + "_from"] =
            cfg.origin_tables[i].substr(cfg.origin_tables[i].rfind('@') + 1);
      }
    }
  }
  auto files = write_report(cfg.output_dir, agg, world, header, cfg.top_n);

  out << "paths classified: " << agg.paths() << "\n";
  out << "records skipped:  " << agg.skips.total();
  if (agg.skips.total() > 0) {
    out << " (";
    bool first = true;
    for (SkipReason r : kAllSkipReasons) {
      if (auto n = agg.skips.count(r)) {
        out << (first ? "" : ", ") << to_string(r) << " " << n;
        first = false;
      }
    }
    out << ")";
  }
  out << "\n";
  if (agg.unclassifiable_paths > 0) {
    out << "unclassifiable paths counted non-normal: " << agg.unclassifiable_paths << "\n";
  }
  out << "global DoN (" << mode_label(cfg) << " hulls):";
  for (Exposure e : kAllExposures) {
    out << "  " << to_string(e) << " " << fmt_don(don(agg.global[index_of(e)]));
  }
  out << "\n";
  out << "report: " << (cfg.output_dir / "report.json").string() << " (" << files.size()
      << " files)\n";
  return 0;
}

// normal-set ---------------------------------------------------------------

nlohmann::json hull_feature(const SphericalHull& hull, CountryCode src, CountryCode dst,
                            HullMode mode) {
  nlohmann::json coords = nlohmann::json::array();
  auto push = [&](const UnitVec3& v) {
    GeoPoint g = unit_to_geo(v);
    coords.push_back({g.lon(), g.lat()});
  };
  for (const auto& v : hull.vertices()) push(v);
  if (hull.kind() == HullKind::polygon || hull.kind() == HullKind::point) {
    push(hull.vertices().front());
  }
  return {{"type", "Feature"},
          {"properties", {{"src", src.str()}, {"dst", dst.str()}, {"mode", to_string(mode)}}},
          {"geometry", {{"type", "LineString"}, {"coordinates", coords}}}};
}

int cmd_normal_set(const RunConfig& cfg, const std::string& mode_text, const std::string& src_text,
                   const std::string& dst_text, const fs::path& export_hull, std::ostream& out) {
  cfg.validate();
  auto loaded = load_world_from(cfg);
  const WorldModel& world = loaded.world;
  CountryCode src = country_arg(src_text, world);
  CountryCode dst = country_arg(dst_text, world);

  std::vector<HullMode> modes;
  if (mode_text == "both") {
    modes = {HullMode::population, HullMode::border};
  } else {
    modes = {*parse_hull_mode(mode_text)};
  }

  nlohmann::json features = nlohmann::json::array();
  for (HullMode mode : modes) {
    NormalSet ns = normal_set(world, src, dst, mode, NormalityOptions{cfg.boundary_step});
    out << to_string(mode) << ": ";
    if (ns.unclassifiable) {
      out << "unclassifiable (points span more than a hemisphere); endpoints "
          << join_codes(ns.countries) << "\n";
      continue;
    }
    out << join_codes(ns.countries) << " (" << ns.countries.size()
        << (ns.countries.size() == 1 ? " country)\n" : " countries)\n");
    if (!export_hull.empty() && src != dst) {
      features.push_back(hull_feature(pair_hull(world, src, dst, mode), src, dst, mode));
    }
  }
  if (!export_hull.empty()) {
    nlohmann::json doc = {{"type", "FeatureCollection"}, {"features", features}};
    std::ofstream f(export_hull);
    f << doc.dump(2) << "\n";
    if (!f) throw Error("cannot write " + export_hull.string());
    out << "hull written to " << export_hull.string() << "\n";
  }
  return 0;
}

// classify-one -------------------------------------------------------------

std::string hop_country(const std::optional<CountryCode>& c) { return c ? c->str() : "?"; }

void print_verdict(std::ostream& out, const char* name, const PathVerdict& v) {
  out << "  " << name << (v.normal ? "normal" : "non-normal");
  if (!v.benefactors.empty()) out << ", benefactors " << join_codes(v.benefactors);
  out << "\n";
}

int cmd_classify_one(const RunConfig& cfg, std::string line, std::ostream& out) {
  cfg.validate();
  if (line == "-") std::getline(std::cin, line);
  TracerouteRecord rec = parse_traceroute(line, "<traceroute>", 1);
  auto loaded = load_world_from(cfg);
  Enrichment enrichment = load_enrichment(cfg);

  auto src = enrichment.locate(rec.src_ip);
  auto dst = enrichment.locate(rec.dst_ip);
  out << "source      " << rec.src_ip.str() << " -> " << hop_country(src) << "\n";
  out << "destination " << rec.dst_ip.str() << " -> " << hop_country(dst) << "\n";
  out << "hops:\n";
  for (const auto& hop : rec.hops) {
    char ttl[16];
    std::snprintf(ttl, sizeof ttl, "%3u", hop.ttl);
    out << "  " << ttl << "  ";
    if (!hop.ip) {
      out << "*  unresponsive, dropped\n";
      continue;
    }
    HopResolution r = enrichment.resolve(*hop.ip, rec.timestamp);
    out << hop.ip->str() << "  " << hop_country(r.phys_country) << "  "
        << (r.asn ? "AS" + std::to_string(r.asn->value) : std::string("AS?")) << "  legal "
        << hop_country(r.legal_country);
    if (!r.phys_country || !r.asn) out << "  dropped";
    out << "\n";
  }

  PairCache cache(loaded.world, NormalityOptions{cfg.boundary_step});
  auto result = process_record(rec, enrichment, cache, {cfg.mode, cfg.unclassifiable});
  if (auto* skip = std::get_if<Skip>(&result)) {
    out << "skipped: " << to_string(skip->reason) << "\n";
    return 0;
  }
  const auto& [tp, pc] = std::get<ProcessedPath>(result);
  out << "dropped hops: " << tp.dropped_hops << " (" << tp.unresponsive_hops
      << " unresponsive)\n";
  out << "tuple path: " << tp.src_country.view() << " ->";
  for (const auto& h : tp.hops) {
    out << " (" << h.phys_country.view() << ",AS" << h.asn.value;
    if (h.legal_country && *h.legal_country != h.phys_country) {
      out << ",legal " << h.legal_country->view();
    }
    out << ")";
  }
  out << " -> " << tp.dst_country.view() << "\n";
  NormalSet ns = cache.get_or_build(tp.src_country, tp.dst_country, cfg.mode);
  out << "normal set (" << mode_label(cfg) << "): "
      << (ns.unclassifiable ? std::string("unclassifiable") : join_codes(ns.countries)) << "\n";
  out << "verdicts:\n";
  print_verdict(out, "physical ", pc.physical);
  print_verdict(out, "legal    ", pc.legal);
  print_verdict(out, "union    ", pc.union_);
  return 0;
}

// validate-world -----------------------------------------------------------

int cmd_validate_world(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  auto loaded = load_world_from(cfg);
  const auto& s = loaded.summary;
  const WorldModel& world = loaded.world;
  out << "countries with cities: " << world.countries().size() << "\n";
  out << "countries with borders: " << world.borders().size() << "\n";
  out << "city rows: " << s.city_rows << "\n";
  out << "borders only: " << join_codes(s.borders_only) << "\n";
  out << "without borders: " << join_codes(s.without_borders) << "\n";
  out << "without region (excluded): " << join_codes(s.without_region) << "\n";
  out << "region only: " << join_codes(s.region_only) << "\n";
  out << "warnings: " << s.warnings.size() << "\n";
  for (const auto& w : s.warnings) out << "  " << w << "\n";
  return 0;
}

void add_world_options(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--cities", cfg.cities, "Cities CSV (iso2,city,lat,lon,population)");
  cmd->add_option("--borders", cfg.borders, "Country borders GeoJSON");
  cmd->add_option("--regions", cfg.regions, "Regions CSV (iso2,region)");
  cmd->add_option("--cities-per-country", cfg.cities_per_country,
                  "Top cities per country used as hull input")
      ->capture_default_str();
  cmd->add_option("--boundary-step", cfg.boundary_step,
                  "Hull edge sampling step in degrees for border intersection")
      ->capture_default_str();
}

void add_enrichment_options(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--geo-table", cfg.geo_table, "Prefix to country CSV (cidr,iso2)");
  cmd->add_option("--origin-table", cfg.origin_tables,
                  "Prefix to origin AS CSV (cidr,asn), optionally FILE@YYYY-MM-DD; repeatable")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  cmd->add_option("--as-registry", cfg.as_registry, "AS to country CSV (asn,iso2)");
  cmd->add_option("--moas", cfg.moas,
                  "Prefixes originated by several ASes: error or first-wins")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, MoasPolicy>{{"error", MoasPolicy::error},
                                            {"first-wins", MoasPolicy::first_wins}}));
}

struct PipelineText {
  std::string mode = "population";
  std::string unclassifiable = "exclude";
};

void add_pipeline_options(CLI::App* cmd, PipelineText& text) {
  cmd->add_option("--mode", text.mode, "Hull mode: population or border")
      ->check(CLI::IsMember({"population", "border"}))
      ->capture_default_str();
  cmd->add_option("--unclassifiable", text.unclassifiable,
                  "Paths whose endpoints have no hull: exclude or count_non_normal")
      ->check(CLI::IsMember({"exclude", "count_non_normal"}))
      ->capture_default_str();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Geographic normality and nation-state exposure of Internet paths", "geoexpose"};
  app.set_config("--config", "", "Read options from a TOML or INI file; flags on the command line win");
  app.require_subcommand(1);
  // A flag given twice (say in a config file and on the command line) keeps the last value.
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  RunConfig cfg;
  PipelineText pipeline_text;

  auto* analyze = app.add_subcommand("analyze", "Classify every traceroute and write the report");
  add_world_options(analyze, cfg);
  add_enrichment_options(analyze, cfg);
  add_pipeline_options(analyze, pipeline_text);
  analyze->add_option("--traceroutes", cfg.traceroutes, "Newline-delimited JSON traceroutes");
  analyze->add_option("--workers", cfg.workers, "Worker threads")->capture_default_str();
  analyze->add_option("--top-n", cfg.top_n, "Rows in ranked tables")->capture_default_str();
  analyze->add_option("--output-dir", cfg.output_dir, "Report directory")->capture_default_str();

  std::string src_text, dst_text, ns_mode = "population";
  fs::path export_hull;
  auto* ns = app.add_subcommand("normal-set", "Print the geographically normal countries of a pair");
  add_world_options(ns, cfg);
  ns->add_option("src", src_text, "Source country (iso2)")->required();
  ns->add_option("dst", dst_text, "Destination country (iso2)")->required();
  ns->add_option("--mode", ns_mode, "population, border or both")
      ->check(CLI::IsMember({"population", "border", "both"}))
      ->capture_default_str();
  ns->add_option("--export-hull", export_hull, "Write the hull ring as a GeoJSON LineString");

  std::string line;
  auto* one = app.add_subcommand("classify-one", "Explain the classification of one traceroute");
  add_world_options(one, cfg);
  add_enrichment_options(one, cfg);
  add_pipeline_options(one, pipeline_text);
  one->add_option("record", line, "One JSON traceroute record, or - to read it from stdin")
      ->required();

  auto* vw = app.add_subcommand("validate-world", "Load the world inputs and print a summary");
  add_world_options(vw, cfg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }
  cfg.mode = *parse_hull_mode(pipeline_text.mode);
  cfg.unclassifiable = *parse_unclassifiable_policy(pipeline_text.unclassifiable);

  try {
    if (analyze->parsed()) return cmd_analyze(cfg, out);
    if (ns->parsed()) return cmd_normal_set(cfg, ns_mode, src_text, dst_text, export_hull, out);
    if (one->parsed()) return cmd_classify_one(cfg, line, out);
    if (vw->parsed()) return cmd_validate_world(cfg, out);
  } catch (const std::exception& e) {
    err << "geoexpose: error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace geoexpose::cli
