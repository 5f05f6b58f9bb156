#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "oaudit/dataset.hpp"
#include "oaudit/embed.hpp"
#include "oaudit/matrix.hpp"

namespace oaudit {

enum class Space { text, demographic, disagreement };

const char* space_name(Space s);
Space space_from_string(const std::string& s);
inline constexpr Space kAllSpaces[] = {Space::text, Space::demographic, Space::disagreement};

struct OutlierConfig {
  Space space = Space::demographic;
  std::size_t n_neighbors = 0;  // 0 selects default_k(n)
  double contamination = 0.05;

  void validate(std::size_t n) const;
};

// min(4000, max(10, ceil(0.2 n))), clamped below n.
std::size_t default_k(std::size_t n);

struct Neighborhood {
  double k_distance = 0.0;
  std::vector<std::uint32_t> ids;  // every point within k_distance; >k under ties
};

// Exact brute-force k-nearest-neighbor pass. Self is excluded.
std::vector<Neighborhood> knn(const Matrix& points, std::size_t k);

// Negated local-outlier-factor scores (more negative = more outlying),
// computed with reach-dist smoothing and an epsilon guard for duplicate-heavy
// inputs. Bit-identical for any thread count.
std::vector<double> lof_scores(const Matrix& points, std::size_t k, int threads = 1);

inline constexpr double kLofEpsilon = 1e-10;

struct LofResult {
  std::vector<double> scores;
  std::vector<std::uint8_t> flags;  // 1 = outlier
  double threshold = 0.0;
  OutlierConfig config;

  std::size_t flagged_count() const;
};

// Flags exactly floor(contamination * n) records with the lowest scores,
// breaking ties by ascending record index/id. threshold = m-th lowest score.
LofResult threshold_by_contamination(const std::vector<double>& scores, double contamination);

struct OutlierAssignment {
  std::map<Space, LofResult> per_space;

  bool has(Space s) const { return per_space.count(s) != 0; }
  bool flag(Space s, std::size_t row) const;
};

// Runs LOF + thresholding per configured space: text uses the embedding rows,
// demographic and disagreement use the table's vector projections.
OutlierAssignment detect_outliers(const DatasetTable& table, const EmbeddingMatrix* text_embeddings,
                                  const std::vector<OutlierConfig>& configs, int threads = 1);

// CSV columns: id, space, score (17 significant digits), flag (outlier/inlier).
void save_lof_csv(const LofResult& result, const std::vector<std::int64_t>& ids,
                  const std::filesystem::path& path);
LofResult load_lof_csv(const std::filesystem::path& path, const std::vector<std::int64_t>& expected_ids);

}  // namespace oaudit
