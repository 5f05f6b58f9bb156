#include "oaudit/lof.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "oaudit/csv.hpp"
#include "oaudit/errors.hpp"
#include "oaudit/kernels.hpp"
#include "oaudit/parallel.hpp"
#include "oaudit/util.hpp"

namespace oaudit {

const char* space_name(Space s) {
  switch (s) {
    case Space::text: return "text";
    case Space::demographic: return "demographic";
    case Space::disagreement: return "disagreement";
  }
  return "unknown";
}

Space space_from_string(const std::string& s) {
  if (s == "text") return Space::text;
  if (s == "demographic") return Space::demographic;
  if (s == "disagreement") return Space::disagreement;
  fail(errc::config, "unknown outlier space '" + s + "' (want text|demographic|disagreement)");
}

std::size_t default_k(std::size_t n) {
  std::size_t k = static_cast<std::size_t>(std::ceil(0.2 * static_cast<double>(n)));
  k = std::max<std::size_t>(10, k);
  k = std::min<std::size_t>(4000, k);
  if (n >= 2 && k >= n) k = n - 1;
  return k;
}

void OutlierConfig::validate(std::size_t n) const {
  if (!(contamination > 0.0 && contamination <= 0.5)) {
    fail(errc::config, std::string(space_name(space)) + ": contamination must be in (0, 0.5], got " +
                           format_double(contamination));
  }
  const std::size_t k = n_neighbors == 0 ? default_k(n) : n_neighbors;
  if (k < 1 || k >= n) {
    fail(errc::config, std::string(space_name(space)) + ": n_neighbors=" + std::to_string(k) +
                           " must satisfy 1 <= k < n (n=" + std::to_string(n) + ")");
  }
}

namespace {

// floor with a relative guard so decimal contaminations like 0.35 * 20
// yield the exact-arithmetic floor despite binary representation error.
std::size_t contamination_count(double contamination, std::size_t n) {
  return static_cast<std::size_t>(std::floor(contamination * static_cast<double>(n) + 1e-9));
}

// Squared k-distance of every point: the k-th smallest squared distance to
// another point. Scratch row reused per thread.
std::vector<double> k_distance_sq(const Matrix& points, std::size_t k, int threads) {
  const std::size_t n = points.rows;
  const auto& kernel = kernels::active_kernel();
  std::vector<double> kd2(n);
  parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> row(n);
    for (std::size_t i = begin; i < end; ++i) {
      kernel.l2sq_row(points.row(i), points.data.data(), n, points.cols, row.data());
      row[i] = std::numeric_limits<double>::infinity();  // exclude self
      std::nth_element(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k - 1), row.end());
      kd2[i] = row[k - 1];
    }
  });
  return kd2;
}

}  // namespace

std::vector<Neighborhood> knn(const Matrix& points, std::size_t k) {
  const std::size_t n = points.rows;
  if (k >= n) {
    fail(errc::config, "knn: k=" + std::to_string(k) + " must be < n=" + std::to_string(n));
  }
  if (k < 1) fail(errc::config, "knn: k must be >= 1");

  std::vector<double> kd2 = k_distance_sq(points, k, 1);
  const auto& kernel = kernels::active_kernel();
  std::vector<Neighborhood> out(n);
  std::vector<double> row(n);
  for (std::size_t i = 0; i < n; ++i) {
    kernel.l2sq_row(points.row(i), points.data.data(), n, points.cols, row.data());
    Neighborhood& nb = out[i];
    nb.k_distance = std::sqrt(kd2[i]);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i && row[j] <= kd2[i]) nb.ids.push_back(static_cast<std::uint32_t>(j));
    }
  }
  return out;
}

std::vector<double> lof_scores(const Matrix& points, std::size_t k, int threads) {
  const std::size_t n = points.rows;
  if (k >= n) {
    fail(errc::config, "lof: k=" + std::to_string(k) + " must be < n=" + std::to_string(n));
  }
  if (k < 1) fail(errc::config, "lof: k must be >= 1");
  for (double v : points.data) {
    if (!std::isfinite(v)) fail(errc::domain, "lof: input coordinates must be finite");
  }

  const auto& kernel = kernels::active_kernel();

  // Pass 1: k-distances.
  std::vector<double> kd2 = k_distance_sq(points, k, threads);
  std::vector<double> kdist(n);
  for (std::size_t i = 0; i < n; ++i) kdist[i] = std::sqrt(kd2[i]);

  // Pass 2: local reachability density. Neighborhoods are streamed rather
  // than materialized; distance ties can make them much larger than k.
  std::vector<double> lrd(n);
  std::vector<std::uint32_t> neighbor_count(n);
  parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> row(n);
    for (std::size_t i = begin; i < end; ++i) {
      kernel.l2sq_row(points.row(i), points.data.data(), n, points.cols, row.data());
      double reach_sum = 0.0;
      std::uint32_t count = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i || row[j] > kd2[i]) continue;
        ++count;
        reach_sum += std::max(kdist[j], std::sqrt(row[j]));
      }
      neighbor_count[i] = count;
      lrd[i] = static_cast<double>(count) / (reach_sum + kLofEpsilon);
    }
  });

  // Pass 3: density ratios, negated.
  std::vector<double> scores(n);
  parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> row(n);
    for (std::size_t i = begin; i < end; ++i) {
      kernel.l2sq_row(points.row(i), points.data.data(), n, points.cols, row.data());
      double lrd_sum = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i || row[j] > kd2[i]) continue;
        lrd_sum += lrd[j];
      }
      const double lof = lrd_sum / (static_cast<double>(neighbor_count[i]) * lrd[i] + kLofEpsilon);
      scores[i] = -lof;
    }
  });
  return scores;
}

std::size_t LofResult::flagged_count() const {
  std::size_t c = 0;
  for (auto f : flags) c += f;
  return c;
}

LofResult threshold_by_contamination(const std::vector<double>& scores, double contamination) {
  const std::size_t n = scores.size();
  for (double s : scores) {
    if (!std::isfinite(s)) fail(errc::domain, "threshold: scores must be finite");
  }
  const std::size_t m = contamination_count(contamination, n);
  if (m == 0) {
    fail(errc::config, "contamination " + format_double(contamination) + " flags zero of " +
                           std::to_string(n) + " records");
  }

  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return scores[a] < scores[b]; });

  LofResult result;
  result.scores = scores;
  result.config.contamination = contamination;
  result.flags.assign(n, 0);
  for (std::size_t i = 0; i < m; ++i) result.flags[order[i]] = 1;
  result.threshold = scores[order[m - 1]];
  return result;
}

bool OutlierAssignment::flag(Space s, std::size_t row) const {
  auto it = per_space.find(s);
  if (it == per_space.end()) fail(errc::config, std::string("no detection for space ") + space_name(s));
  return it->second.flags[row] != 0;
}

OutlierAssignment detect_outliers(const DatasetTable& table, const EmbeddingMatrix* text_embeddings,
                                  const std::vector<OutlierConfig>& configs, int threads) {
  const std::size_t n = table.n_rows();
  OutlierAssignment assignment;
  for (const auto& config : configs) {
    config.validate(n);
    Matrix points;
    switch (config.space) {
      case Space::text: {
        if (text_embeddings == nullptr) {
          fail(errc::config, "text space requested but no embeddings supplied");
        }
        if (text_embeddings->rows != n) {
          fail(errc::alignment, "embedding rows " + std::to_string(text_embeddings->rows) +
                                    " do not match table rows " + std::to_string(n));
        }
        points.rows = text_embeddings->rows;
        points.cols = text_embeddings->dim;
        points.data = text_embeddings->data;
        break;
      }
      case Space::demographic:
        points = table.demographic_matrix();
        break;
      case Space::disagreement:
        points = table.disagreement_matrix();
        break;
    }
    const std::size_t k = config.n_neighbors == 0 ? default_k(n) : config.n_neighbors;
    std::vector<double> scores = lof_scores(points, k, threads);
    LofResult result = threshold_by_contamination(scores, config.contamination);
    result.config = config;
    result.config.n_neighbors = k;
    assignment.per_space[config.space] = std::move(result);
  }
  return assignment;
}

void save_lof_csv(const LofResult& result, const std::vector<std::int64_t>& ids,
                  const std::filesystem::path& path) {
  if (ids.size() != result.scores.size()) {
    fail(errc::alignment, "lof csv: id count does not match score count");
  }
  CsvWriter w(path);
  w.write_row({"id", "space", "score", "flag"});
  const std::string space = space_name(result.config.space);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    w.write_row({std::to_string(ids[i]), space, format_double_17(result.scores[i]),
                 result.flags[i] ? "outlier" : "inlier"});
  }
  w.close();
}

LofResult load_lof_csv(const std::filesystem::path& path, const std::vector<std::int64_t>& expected_ids) {
  CsvTable csv = read_csv(path);
  const int id_col = csv.column("id");
  const int space_col = csv.column("space");
  const int score_col = csv.column("score");
  const int flag_col = csv.column("flag");
  if (id_col < 0 || space_col < 0 || score_col < 0 || flag_col < 0) {
    fail(errc::format, path.string() + ": expected columns id,space,score,flag");
  }
  if (csv.rows.size() != expected_ids.size()) {
    fail(errc::alignment, path.string() + ": row count " + std::to_string(csv.rows.size()) +
                              " does not match dataset rows " + std::to_string(expected_ids.size()));
  }
  LofResult result;
  result.scores.reserve(csv.rows.size());
  result.flags.reserve(csv.rows.size());
  std::string space;
  for (std::size_t i = 0; i < csv.rows.size(); ++i) {
    const auto& row = csv.rows[i];
    std::int64_t id;
    if (!parse_int64(row[id_col], id) || id != expected_ids[i]) {
      fail(errc::alignment, path.string() + " row " + std::to_string(i + 2) + ": id mismatch");
    }
    double score;
    if (!parse_double(row[score_col], score)) {
      fail(errc::format, path.string() + " row " + std::to_string(i + 2) + ": bad score");
    }
    if (space.empty()) space = row[space_col];
    else if (space != row[space_col]) {
      fail(errc::format, path.string() + ": mixed spaces in one file");
    }
    result.scores.push_back(score);
    if (row[flag_col] == "outlier") result.flags.push_back(1);
    else if (row[flag_col] == "inlier") result.flags.push_back(0);
    else fail(errc::format, path.string() + " row " + std::to_string(i + 2) + ": bad flag '" + row[flag_col] + "'");
  }
  result.config.space = space_from_string(space);
  // Recover the threshold: the largest flagged score.
  bool any = false;
  for (std::size_t i = 0; i < result.flags.size(); ++i) {
    if (!result.flags[i]) continue;
    if (!any || result.scores[i] > result.threshold) result.threshold = result.scores[i];
    any = true;
  }
  return result;
}

}  // namespace oaudit
