#pragma once

#include <optional>
#include <string>
#include <vector>

#include "oaudit/audit.hpp"
#include "oaudit/dataset.hpp"
#include "oaudit/lof.hpp"

namespace oaudit {

struct SweepPoint {
  double contamination = 0.0;  // fraction
  std::size_t group_size = 0;  // flagged rows
  WmseResult wmse;
};

struct SweepCurve {
  Space space = Space::demographic;
  std::string model_id;
  std::vector<SweepPoint> points;               // sorted by group_size ascending
  std::vector<double> skipped_contaminations;  // flagged zero rows
};

// Percent values from config normalize to fractions; anything above 50%
// is rejected.
std::vector<double> normalize_schedule_percent(const std::vector<double>& percents);

// Re-thresholds one set of LOF scores across the schedule and traces the
// outlier group's WMSE against its size. Scores are computed once by the
// caller (detection stage) and reused here.
SweepCurve contamination_sweep(const DatasetTable& table, const std::vector<double>& lof_scores_for_space,
                               Space space, const std::vector<double>& schedule_fractions,
                               const std::string& model_id, const std::vector<std::string>& toxicity_types);

enum class CurveVerdict { below, above, out_of_range };
const char* curve_verdict_name(CurveVerdict v);

struct GroupVerdict {
  std::string group;
  std::size_t size = 0;
  double wmse = 0.0;
  std::optional<double> curve_value;  // nullopt when out of the curve's span
  CurveVerdict verdict = CurveVerdict::out_of_range;
};

struct BelowCurveResult {
  std::size_t below = 0;
  std::size_t above = 0;
  std::size_t out_of_range = 0;
  std::vector<GroupVerdict> verdicts;
};

// Linear interpolation of the curve at each group's size; a group exactly on
// the curve counts as above.
BelowCurveResult groups_below_curve(const SweepCurve& curve, const std::vector<WmseResult>& group_results);

}  // namespace oaudit
