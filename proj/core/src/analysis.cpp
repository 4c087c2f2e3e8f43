#include "geoexpose/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <deque>
#include <exception>
#include <fstream>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "geoexpose/error.hpp"

namespace geoexpose {

namespace {

void fold(Aggregate& agg, const TracerouteRecord& rec, const Enrichment& enrichment,
          PairCache& cache, const PipelineOptions& options) {
  auto result = process_record(rec, enrichment, cache, options);
  if (auto* skip = std::get_if<Skip>(&result)) {
    agg.skips.add(skip->reason);
    return;
  }
  const auto& done = std::get<ProcessedPath>(result);
  accumulate(agg, done.path, done.classification, cache.world());
}

struct Line {
  std::size_t number;
  std::size_t records_before;  // non-blank lines ahead of this one
  std::string text;
};

/// Bounded multi-consumer queue of line batches.
class BatchQueue {
 public:
  explicit BatchQueue(std::size_t capacity) : capacity_(capacity) {}

  void push(std::vector<Line> batch) {
    std::unique_lock lock(mutex_);
    not_full_.wait(lock, [&] { return queue_.size() < capacity_; });
    queue_.push_back(std::move(batch));
    not_empty_.notify_one();
  }

  std::optional<std::vector<Line>> pop() {
    std::unique_lock lock(mutex_);
    not_empty_.wait(lock, [&] { return !queue_.empty() || closed_; });
    if (queue_.empty()) return std::nullopt;
    auto batch = std::move(queue_.front());
    queue_.pop_front();
    not_full_.notify_one();
    return batch;
  }

  void close() {
    std::lock_guard lock(mutex_);
    closed_ = true;
    not_empty_.notify_all();
  }

 private:
  std::size_t capacity_;
  std::mutex mutex_;
  std::condition_variable not_empty_, not_full_;
  std::deque<std::vector<Line>> queue_;
  bool closed_ = false;
};

}  // namespace

Aggregate analyze_records(std::span<const TracerouteRecord> records, const Enrichment& enrichment,
                          PairCache& cache, const AnalysisOptions& options) {
  const unsigned workers = std::max(1u, options.workers);
  std::vector<Aggregate> partial(workers);
  if (workers == 1) {
    for (const auto& rec : records) fold(partial[0], rec, enrichment, cache, options.pipeline);
    return partial[0];
  }

  std::atomic<std::size_t> next{0};
  const std::size_t batch = std::max<std::size_t>(1, options.batch_size);
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> threads;
  for (unsigned w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        for (;;) {
          std::size_t begin = next.fetch_add(batch);
          if (begin >= records.size()) break;
          std::size_t end = std::min(records.size(), begin + batch);
          for (std::size_t i = begin; i < end; ++i) {
            fold(partial[w], records[i], enrichment, cache, options.pipeline);
          }
        }
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  Aggregate total;
  for (const auto& p : partial) total.merge(p);
  return total;
}

Aggregate analyze_stream(std::istream& in, const std::string& source, const Enrichment& enrichment,
                         PairCache& cache, const AnalysisOptions& options) {
  const unsigned workers = std::max(1u, options.workers);
  const std::size_t batch_size = std::max<std::size_t>(1, options.batch_size);

  BatchQueue queue(2 * workers);
  std::vector<Aggregate> partial(workers);

  // The earliest failing line wins, so the reported error does not depend on
  // scheduling: every batch before it was queued and is fully processed.
  std::mutex error_mutex;
  std::optional<Line> error_line;
  std::exception_ptr error;
  std::atomic<bool> failed{false};

  auto work = [&](unsigned w) {
    while (auto batch = queue.pop()) {
      for (const auto& line : *batch) {
        try {
          TracerouteRecord rec = parse_traceroute(line.text, source, line.number);
          fold(partial[w], rec, enrichment, cache, options.pipeline);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error_line || line.number < error_line->number) {
            error_line = Line{line.number, line.records_before, {}};
            error = std::current_exception();
          }
          failed = true;
          break;
        }
      }
    }
  };

  std::vector<std::thread> threads;
  for (unsigned w = 0; w < workers; ++w) threads.emplace_back(work, w);

  std::size_t line_no = 0;
  std::size_t records = 0;
  std::vector<Line> batch;
  std::string text;
  while (!failed && std::getline(in, text)) {
    ++line_no;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.find_first_not_of(" \t") == std::string::npos) continue;
    batch.push_back({line_no, records++, std::move(text)});
    if (batch.size() == batch_size) {
      queue.push(std::move(batch));
      batch.clear();
    }
  }
  const bool read_error = in.bad();
  if (!batch.empty() && !failed) queue.push(std::move(batch));
  queue.close();
  for (auto& t : threads) t.join();

  if (error) {
    try {
      std::rethrow_exception(error);
    } catch (const ParseError& e) {
      throw ParseError(e.source(), e.line(),
                       e.detail() + " (" + std::to_string(error_line->records_before) +
                           " records processed before aborting)");
    }
  }
  if (read_error) {
    throw ParseError(source, line_no,
                     "read error after " + std::to_string(records) + " records");
  }

  Aggregate total;
  for (const auto& p : partial) total.merge(p);
  return total;
}

Aggregate analyze_file(const std::filesystem::path& file, const Enrichment& enrichment,
                       PairCache& cache, const AnalysisOptions& options) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ParseError(file.string(), 0, "cannot open file");
  return analyze_stream(in, file.string(), enrichment, cache, options);
}

}  // namespace geoexpose
