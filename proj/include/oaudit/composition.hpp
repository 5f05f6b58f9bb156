#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "oaudit/dataset.hpp"
#include "oaudit/lof.hpp"

namespace oaudit {

struct CompositionRow {
  std::string group;
  std::size_t n_members = 0;
  std::size_t n_outliers = 0;
  std::optional<double> proportion;  // nullopt for empty groups, rendered "—"
  double baseline = 0.0;             // overall flagged fraction
};

// One row per demographic channel, sorted by proportion descending (empty
// groups last).
std::vector<CompositionRow> outlier_proportion_per_group(const DatasetTable& table,
                                                         const OutlierAssignment& assignment,
                                                         Space space);

struct IdentityCountStats {
  double mean_in = 0.0;   // flagged rows
  double mean_out = 0.0;  // unflagged rows
  double p_value = 1.0;   // two-sided Welch, normal approximation
};

// Identity count of a row = sum of its binary demographic labels.
IdentityCountStats mean_identity_count(const DatasetTable& table, const OutlierAssignment& assignment,
                                       Space space);

}  // namespace oaudit
