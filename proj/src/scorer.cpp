#include "oaudit/scorer.hpp"

#include <cmath>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "oaudit/csv.hpp"
#include "oaudit/errors.hpp"
#include "oaudit/util.hpp"

namespace oaudit {

void ScorerEndpointConfig::validate() const {
  if (base_url.empty()) fail(errc::config, "scorer: base_url is required");
  if (!(requests_per_second > 0.0)) fail(errc::config, "scorer: requests_per_second must be > 0");
  if (max_retries < 0 || max_retries > 10) fail(errc::config, "scorer: max_retries must be in [0,10]");
  if (!(timeout_seconds > 0.0)) fail(errc::config, "scorer: timeout must be > 0");
  if (attribute_map.empty()) fail(errc::config, "scorer: attribute_map is empty");
  if (model_id.empty()) fail(errc::config, "scorer: model_id is required");
}

RateLimiter::RateLimiter(double requests_per_second)
    : rate_(requests_per_second), start_(std::chrono::steady_clock::now()) {
  if (!(rate_ > 0.0)) fail(errc::config, "rate limiter: rate must be > 0");
}

void RateLimiter::acquire() {
  using namespace std::chrono;
  std::unique_lock<std::mutex> lock(mutex_);
  for (;;) {
    const auto now = steady_clock::now();
    const auto window_start = now - seconds(1);
    while (!window_.empty() && window_.front() <= window_start) window_.pop_front();

    steady_clock::time_point earliest = now;
    if (rate_ < 1.0) {
      const auto gap = duration_cast<steady_clock::duration>(duration<double>(1.0 / rate_));
      if (!history_.empty()) {
        const auto last = start_ + duration_cast<steady_clock::duration>(duration<double>(history_.back()));
        earliest = std::max(earliest, last + gap);
      }
    } else if (window_.size() >= static_cast<std::size_t>(std::floor(rate_))) {
      // A hair past the oldest send's expiry keeps the half-open window honest.
      earliest = window_.front() + seconds(1) + microseconds(50);
    }
    if (earliest <= now) {
      window_.push_back(now);
      history_.push_back(duration<double>(now - start_).count());
      return;
    }
    lock.unlock();
    std::this_thread::sleep_until(earliest);
    lock.lock();
  }
}

std::vector<double> RateLimiter::send_times() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return history_;
}

namespace {

std::string cache_key(std::uint64_t text_hash, const std::string& model, const std::string& attribute) {
  return to_hex(text_hash) + "|" + model + "|" + attribute;
}

}  // namespace

ScoreCache::ScoreCache(const std::filesystem::path& path) : path_(path) {
  std::ifstream in(path);
  if (!in) return;  // cold cache
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      const double value = j.at("value").get<double>();
      if (!(value >= 0.0 && value <= 1.0)) {
        fail(errc::format, path.string() + " line " + std::to_string(line_no) + ": value outside [0,1]");
      }
      entries_[cache_key(std::stoull(j.at("text_hash").get<std::string>(), nullptr, 16),
                         j.at("model").get<std::string>(), j.at("attribute").get<std::string>())] = value;
    } catch (const nlohmann::json::exception& e) {
      fail(errc::format, path.string() + " line " + std::to_string(line_no) + ": " + e.what());
    } catch (const std::exception& e) {
      fail(errc::format, path.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

bool ScoreCache::lookup(std::uint64_t text_hash, const std::string& model, const std::string& attribute,
                        double& value) const {
  auto it = entries_.find(cache_key(text_hash, model, attribute));
  if (it == entries_.end()) return false;
  value = it->second;
  return true;
}

void ScoreCache::store(std::uint64_t text_hash, const std::string& model, const std::string& attribute,
                       double value) {
  std::lock_guard<std::mutex> lock(mutex_);
  entries_[cache_key(text_hash, model, attribute)] = value;
  nlohmann::json j{{"text_hash", to_hex(text_hash)},
                   {"model", model},
                   {"attribute", attribute},
                   {"value", value},
                   {"fetched_at", static_cast<std::int64_t>(std::chrono::duration_cast<std::chrono::seconds>(
                                                                std::chrono::system_clock::now().time_since_epoch())
                                                                .count())}};
  std::ofstream out(path_, std::ios::app);
  if (!out) fail(errc::io, "cannot append to cache " + path_.string());
  out << j.dump() << "\n";
}

namespace {

struct HttpAttempt {
  bool transport_error = false;
  int status = 0;
  std::string body;
};

bool is_transient(const HttpAttempt& a) {
  return a.transport_error || a.status == 429 || (a.status >= 500 && a.status < 600);
}

}  // namespace

DatasetTable fetch_scores(const DatasetTable& table, const ScorerEndpointConfig& config,
                          const std::filesystem::path& cache_path, FetchOutcome* outcome) {
  config.validate();
  ScoreCache cache(cache_path);
  RateLimiter limiter(config.requests_per_second);
  FetchOutcome stats;

  httplib::Client client(config.base_url);
  client.set_connection_timeout(std::chrono::milliseconds(static_cast<int>(config.timeout_seconds * 1000)));
  client.set_read_timeout(std::chrono::milliseconds(static_cast<int>(config.timeout_seconds * 1000)));

  std::string url_path = config.request_path;
  if (!config.api_key.empty()) url_path += "?key=" + config.api_key;

  // column per local attribute, NaN until filled
  std::map<std::string, std::vector<double>> columns;
  for (const auto& [local, remote] : config.attribute_map) {
    (void)remote;
    columns[local].assign(table.n_rows(), std::nan(""));
  }

  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    const std::uint64_t text_hash = fnv1a64(table.text(r));

    std::vector<std::string> missing;
    for (const auto& [local, remote] : config.attribute_map) {
      (void)remote;
      double cached;
      if (cache.lookup(text_hash, config.model_id, local, cached)) {
        columns[local][r] = cached;
        ++stats.cache_hits;
      } else {
        missing.push_back(local);
      }
    }
    if (missing.empty()) continue;

    nlohmann::json requested = nlohmann::json::object();
    for (const auto& local : missing) requested[config.attribute_map.at(local)] = nlohmann::json::object();
    const nlohmann::json body{{"comment", {{"text", table.text(r)}}}, {"requestedAttributes", requested}};
    const std::string payload = body.dump();

    HttpAttempt attempt;
    bool sent = false;
    for (int try_no = 0; try_no <= config.max_retries; ++try_no) {
      if (try_no > 0) {
        const double delay = config.backoff_base_seconds * std::pow(2.0, try_no - 1);
        std::this_thread::sleep_for(std::chrono::duration<double>(delay));
      }
      limiter.acquire();
      ++stats.requests;
      auto res = client.Post(url_path, payload, "application/json");
      attempt = HttpAttempt{};
      if (!res) {
        attempt.transport_error = true;
      } else {
        attempt.status = res->status;
        attempt.body = res->body;
      }
      if (attempt.status == 200) {
        sent = true;
        break;
      }
      if (!is_transient(attempt)) break;
    }

    if (!sent) {
      const std::string why = attempt.transport_error
                                  ? "transport error"
                                  : "HTTP " + std::to_string(attempt.status);
      for (const auto& local : missing) {
        stats.errors.push_back({table.id(r), local, why});
      }
      continue;
    }

    nlohmann::json parsed;
    try {
      parsed = nlohmann::json::parse(attempt.body);
    } catch (const nlohmann::json::exception& e) {
      fail(errc::parse, "row " + std::to_string(table.id(r)) + ": unparseable scorer response: " + e.what());
    }
    for (const auto& local : missing) {
      const std::string& remote = config.attribute_map.at(local);
      double value;
      try {
        value = parsed.at("attributeScores").at(remote).at("summaryScore").at("value").get<double>();
      } catch (const nlohmann::json::exception&) {
        fail(errc::parse, "row " + std::to_string(table.id(r)) + ": scorer response missing attributeScores." +
                              remote + ".summaryScore.value");
      }
      if (!(value >= 0.0 && value <= 1.0)) {
        fail(errc::parse, "row " + std::to_string(table.id(r)) + ": score " + format_double(value) +
                              " outside [0,1] for attribute " + remote);
      }
      columns[local][r] = value;
      cache.store(text_hash, config.model_id, local, value);
    }
  }

  DatasetTable out = table;
  for (const auto& [local, values] : columns) out.add_score_channel(config.model_id, local, values);
  if (outcome != nullptr) *outcome = std::move(stats);
  return out;
}

DatasetTable import_scores(const DatasetTable& table, const std::filesystem::path& csv_path,
                           const std::string& model_id) {
  CsvTable csv = read_csv(csv_path);
  const int id_col = csv.column("id");
  if (id_col < 0) fail(errc::format, csv_path.string() + ": missing id column");

  std::vector<std::pair<std::string, std::size_t>> attr_cols;  // (attribute, csv column)
  for (std::size_t c = 0; c < csv.header.size(); ++c) {
    if (static_cast<int>(c) == id_col) continue;
    attr_cols.emplace_back(csv.header[c], c);
  }
  if (attr_cols.empty()) fail(errc::format, csv_path.string() + ": no attribute columns");
  for (const auto& [attr, col] : attr_cols) {
    (void)col;
    bool known = false;
    for (const auto& t : table.toxicity_names()) known |= (t == attr);
    if (!known) fail(errc::format, csv_path.string() + ": column '" + attr + "' is not a toxicity annotation");
  }

  std::map<std::int64_t, std::size_t> file_rows;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    std::int64_t id;
    if (!parse_int64(csv.rows[r][id_col], id)) {
      fail(errc::format, csv_path.string() + " row " + std::to_string(r + 2) + ": bad id");
    }
    if (!file_rows.emplace(id, r).second) {
      fail(errc::format, csv_path.string() + ": duplicate id " + std::to_string(id));
    }
  }

  DatasetTable out = table;
  for (const auto& [attr, col] : attr_cols) {
    std::vector<double> values(table.n_rows(), std::nan(""));
    for (std::size_t r = 0; r < table.n_rows(); ++r) {
      auto it = file_rows.find(table.id(r));
      if (it == file_rows.end()) continue;
      const std::string& cell = csv.rows[it->second][col];
      if (cell.empty()) continue;
      double v;
      if (!parse_double(cell, v)) {
        fail(errc::format, csv_path.string() + " row " + std::to_string(it->second + 2) +
                               ": cannot parse score '" + cell + "'");
      }
      if (!(v >= 0.0 && v <= 1.0)) {
        fail(errc::domain, csv_path.string() + " row " + std::to_string(it->second + 2) + ": score " +
                               format_double(v) + " outside [0,1]");
      }
      values[r] = v;
    }
    out.add_score_channel(model_id, attr, values);
  }
  return out;
}

void export_scores(const DatasetTable& table, const std::filesystem::path& csv_path,
                   const std::string& model_id) {
  std::vector<std::string> attrs;
  for (const auto& ch : table.schema()) {
    if (ch.kind == ChannelKind::model_score && ch.model_id == model_id) attrs.push_back(ch.target);
  }
  if (attrs.empty()) fail(errc::schema, "no score channels for model '" + model_id + "'");

  CsvWriter w(csv_path);
  std::vector<std::string> header{"id"};
  header.insert(header.end(), attrs.begin(), attrs.end());
  w.write_row(header);
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    std::vector<std::string> row{std::to_string(table.id(r))};
    for (const auto& attr : attrs) {
      const std::size_t chan = table.channel_index(score_channel_name(model_id, attr));
      row.push_back(table.has_value(r, chan) ? format_double(table.value(r, chan)) : std::string());
    }
    w.write_row(row);
  }
  w.close();
}

}  // namespace oaudit
