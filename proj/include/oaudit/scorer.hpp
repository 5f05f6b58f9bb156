#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "oaudit/dataset.hpp"

namespace oaudit {

struct ScorerEndpointConfig {
  std::string base_url;                              // scheme://host[:port]
  std::string request_path = "/v1alpha1/comments:analyze";
  std::string api_key;                               // appended as ?key=...
  std::string model_id = "perspective";
  std::string api_version = "v1alpha1";              // provenance string for the report
  std::map<std::string, std::string> attribute_map;  // local annotation -> remote attribute
  double requests_per_second = 1.0;
  int max_retries = 3;
  double timeout_seconds = 10.0;
  double backoff_base_seconds = 1.0;                 // doubles per retry

  void validate() const;
};

// Sliding-window limiter. For rates >= 1 it admits at most floor(rate)
// sends in any trailing one-second window; below 1 it enforces a 1/rate
// minimum gap between sends.
class RateLimiter {
 public:
  explicit RateLimiter(double requests_per_second);
  void acquire();

  // Send instants in seconds since construction, for window assertions.
  std::vector<double> send_times() const;

 private:
  double rate_;
  std::chrono::steady_clock::time_point start_;
  std::deque<std::chrono::steady_clock::time_point> window_;
  std::vector<double> history_;
  mutable std::mutex mutex_;
};

// Append-only JSON-lines cache keyed by (text content hash, model, attribute),
// so duplicated texts cost a single request.
class ScoreCache {
 public:
  explicit ScoreCache(const std::filesystem::path& path);

  bool lookup(std::uint64_t text_hash, const std::string& model, const std::string& attribute,
              double& value) const;
  void store(std::uint64_t text_hash, const std::string& model, const std::string& attribute, double value);

 private:
  std::filesystem::path path_;
  std::map<std::string, double> entries_;
  std::mutex mutex_;
};

struct FetchOutcome {
  std::size_t requests = 0;
  std::size_t cache_hits = 0;  // (row, attribute) pairs served from cache
  struct RowError {
    std::int64_t id;
    std::string attribute;
    std::string message;
  };
  std::vector<RowError> errors;  // rows left without a score
};

// Scores every mapped attribute for every row, one HTTP request per row with
// uncached attributes. Transient failures (429/5xx/transport) retry with
// exponential backoff; other HTTP errors are recorded per row and the score
// stays absent. A malformed response body is a parse error naming the row.
DatasetTable fetch_scores(const DatasetTable& table, const ScorerEndpointConfig& config,
                          const std::filesystem::path& cache_path, FetchOutcome* outcome = nullptr);

// CSV with an id column plus one column per toxicity annotation. Rows absent
// from the file keep absent scores; duplicate file ids are a format error.
DatasetTable import_scores(const DatasetTable& table, const std::filesystem::path& csv_path,
                           const std::string& model_id);

void export_scores(const DatasetTable& table, const std::filesystem::path& csv_path,
                   const std::string& model_id);

}  // namespace oaudit
