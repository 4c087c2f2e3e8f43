#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <span>
#include <string>

#include "geoexpose/enrichment.hpp"
#include "geoexpose/metrics.hpp"
#include "geoexpose/normality.hpp"
#include "geoexpose/path.hpp"

namespace geoexpose {

struct AnalysisOptions {
  PipelineOptions pipeline;
  unsigned workers = 1;
  std::size_t batch_size = 512;
};

/// Runs every record through the pipeline and folds the results into one
/// Aggregate. Each worker owns a private aggregate; they are merged once all
/// input is consumed, so the result does not depend on `workers`.
Aggregate analyze_records(std::span<const TracerouteRecord> records, const Enrichment& enrichment,
                          PairCache& cache, const AnalysisOptions& options);

/// Same, reading newline-delimited JSON records from `in`. The calling thread
/// reads and hands batches of lines to the workers. A malformed line aborts
/// the run with a ParseError naming the first bad line and how many records
/// were processed before it.
Aggregate analyze_stream(std::istream& in, const std::string& source, const Enrichment& enrichment,
                         PairCache& cache, const AnalysisOptions& options);

Aggregate analyze_file(const std::filesystem::path& file, const Enrichment& enrichment,
                       PairCache& cache, const AnalysisOptions& options);

}  // namespace geoexpose
