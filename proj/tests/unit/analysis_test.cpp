#include <random>
#include <sstream>

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include "geoexpose/analysis.hpp"
#include "geoexpose/error.hpp"
#include "synthetic.hpp"

namespace geoexpose {
namespace {

using ::testing::HasSubstr;

struct Fixture {
  LoadedWorld world = testing::load_toy_world();
  Enrichment enrichment = testing::synthetic_enrichment();
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

std::string jsonl(const std::vector<TracerouteRecord>& recs) {
  std::string out;
  for (const auto& r : recs) out += testing::to_json_line(r) + "\n";
  return out;
}

Aggregate run_stream(const std::string& text, unsigned workers, std::size_t batch) {
  PairCache cache(fixture().world.world);
  std::istringstream in(text);
  return analyze_stream(in, "mem.jsonl", fixture().enrichment, cache,
                        AnalysisOptions{PipelineOptions{}, workers, batch});
}

TEST(Analysis, WorkerCountDoesNotChangeTheAggregate) {
  std::mt19937_64 rng(73);
  auto recs = testing::random_records(rng, 3000);
  PairCache cache(fixture().world.world);
  Aggregate one = analyze_records(recs, fixture().enrichment, cache, {PipelineOptions{}, 1, 512});
  Aggregate eight = analyze_records(recs, fixture().enrichment, cache, {PipelineOptions{}, 8, 37});
  EXPECT_EQ(one, eight);
  EXPECT_EQ(one.paths() + one.skips.total(), 3000u);

  auto text = jsonl(recs);
  EXPECT_EQ(run_stream(text, 1, 512), one);
  EXPECT_EQ(run_stream(text, 8, 64), one);
  EXPECT_EQ(run_stream(text, 3, 1), one);
}

TEST(Analysis, MatchesSerialPipelinePlusAccumulate) {
  std::mt19937_64 rng(79);
  auto recs = testing::random_records(rng, 1000);
  PairCache cache(fixture().world.world);
  SkipLog skips;
  Aggregate want;
  for (const auto& [tp, pc] : process_stream(recs, fixture().enrichment, cache, {}, skips)) {
    accumulate(want, tp, pc, fixture().world.world);
  }
  want.skips = skips;
  EXPECT_EQ(analyze_records(recs, fixture().enrichment, cache, {PipelineOptions{}, 4, 100}), want);
}

TEST(Analysis, EmptyInputAndBlankLines) {
  EXPECT_EQ(run_stream("", 4, 8), Aggregate{});
  EXPECT_EQ(run_stream("\n\n  \n", 2, 8), Aggregate{});
  std::mt19937_64 rng(83);
  auto recs = testing::random_records(rng, 20);
  auto text = jsonl(recs);
  std::string spaced;
  for (char c : text) {
    spaced += c;
    if (c == '\n') spaced += "\n";
  }
  EXPECT_EQ(run_stream(spaced, 2, 3), run_stream(text, 1, 512));
}

TEST(Analysis, MalformedLineNamesTheFirstBadLine) {
  std::mt19937_64 rng(89);
  auto recs = testing::random_records(rng, 200);
  std::vector<std::string> lines;
  for (const auto& r : recs) lines.push_back(testing::to_json_line(r));
  lines[150] = "{\"src_ip\": ";
  lines[57] = "not json";
  lines[180] = "[]";
  std::string text;
  for (const auto& l : lines) text += l + "\n";
  for (unsigned workers : {1u, 4u}) {
    for (std::size_t batch : {std::size_t{1}, std::size_t{16}, std::size_t{512}}) {
      try {
        run_stream(text, workers, batch);
        ADD_FAILURE() << "expected ParseError";
      } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 58u) << workers << "/" << batch;
        EXPECT_EQ(e.source(), "mem.jsonl");
        EXPECT_THAT(e.what(), HasSubstr("mem.jsonl:58"));
        EXPECT_THAT(e.what(), HasSubstr("57 records processed"));
      }
    }
  }
}

TEST(Analysis, UnknownEndpointCountryIsSkippedNotFatal) {
  Enrichment e = testing::synthetic_enrichment();
  e.geo.insert(*IpPrefix::parse("9.0.0.0/8"), CountryCode::of("ZZ"));
  TracerouteRecord rec{*IpAddress::parse("9.0.0.1"), *IpAddress::parse("1.1.0.1"), 0,
                       {{1, IpAddress::parse("1.1.0.1")}}};
  PairCache cache(fixture().world.world);
  std::vector<TracerouteRecord> recs = {rec};
  auto agg = analyze_records(recs, e, cache, {});
  EXPECT_EQ(agg.paths(), 0u);
  EXPECT_EQ(agg.skips.count(SkipReason::unresolved_source), 1u);
}

TEST(Analysis, AnalyzeFileReportsMissingFile) {
  PairCache cache(fixture().world.world);
  EXPECT_THROW(analyze_file("/nonexistent/trace.jsonl", fixture().enrichment, cache, {}), ParseError);
}

}  // namespace
}  // namespace geoexpose
