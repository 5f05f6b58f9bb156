#include "oaudit/sweep.hpp"

#include <algorithm>
#include <cmath>

#include "oaudit/errors.hpp"
#include "oaudit/util.hpp"

namespace oaudit {

std::vector<double> normalize_schedule_percent(const std::vector<double>& percents) {
  std::vector<double> fractions;
  fractions.reserve(percents.size());
  for (double p : percents) {
    if (!(p > 0.0)) fail(errc::config, "sweep schedule values must be positive, got " + format_double(p));
    const double f = p / 100.0;
    if (f > 0.5) {
      fail(errc::config, "sweep contamination " + format_double(p) + "% exceeds 50%, which is ill-posed");
    }
    fractions.push_back(f);
  }
  return fractions;
}

SweepCurve contamination_sweep(const DatasetTable& table, const std::vector<double>& lof_scores_for_space,
                               Space space, const std::vector<double>& schedule_fractions,
                               const std::string& model_id, const std::vector<std::string>& toxicity_types) {
  if (lof_scores_for_space.size() != table.n_rows()) {
    fail(errc::alignment, "sweep: score count does not match table rows");
  }
  SweepCurve curve;
  curve.space = space;
  curve.model_id = model_id;

  for (double c : schedule_fractions) {
    const double m = std::floor(c * static_cast<double>(table.n_rows()) + 1e-9);
    if (m < 1.0) {
      curve.skipped_contaminations.push_back(c);
      continue;
    }
    LofResult result = threshold_by_contamination(lof_scores_for_space, c);
    result.config.space = space;

    OutlierAssignment assignment;
    assignment.per_space[space] = std::move(result);
    GroupSpec group{std::string(space_name(space)) + "_outliers", GroupKind::outlier, {space_name(space)}, 0};

    SweepPoint point;
    point.contamination = c;
    point.group_size = assignment.per_space[space].flagged_count();
    point.wmse = wmse(table, group, {model_id}, toxicity_types, &assignment);
    curve.points.push_back(std::move(point));
  }
  std::stable_sort(curve.points.begin(), curve.points.end(),
                   [](const SweepPoint& a, const SweepPoint& b) { return a.group_size < b.group_size; });
  return curve;
}

const char* curve_verdict_name(CurveVerdict v) {
  switch (v) {
    case CurveVerdict::below: return "below";
    case CurveVerdict::above: return "above";
    case CurveVerdict::out_of_range: return "out_of_range";
  }
  return "unknown";
}

BelowCurveResult groups_below_curve(const SweepCurve& curve, const std::vector<WmseResult>& group_results) {
  if (curve.points.size() < 2) fail(errc::config, "groups_below_curve: need at least two curve points");

  BelowCurveResult out;
  for (const auto& g : group_results) {
    GroupVerdict verdict;
    verdict.group = g.group.name;
    verdict.size = g.group_size;
    verdict.wmse = g.value;

    const double x = static_cast<double>(g.group_size);
    const auto& pts = curve.points;
    if (x < static_cast<double>(pts.front().group_size) || x > static_cast<double>(pts.back().group_size)) {
      verdict.verdict = CurveVerdict::out_of_range;
      ++out.out_of_range;
    } else {
      std::size_t hi = 1;
      while (hi < pts.size() && static_cast<double>(pts[hi].group_size) < x) ++hi;
      const double x0 = static_cast<double>(pts[hi - 1].group_size);
      const double x1 = static_cast<double>(pts[hi].group_size);
      const double y0 = pts[hi - 1].wmse.value;
      const double y1 = pts[hi].wmse.value;
      const double t = x1 == x0 ? 0.0 : (x - x0) / (x1 - x0);
      verdict.curve_value = y0 + t * (y1 - y0);
      if (g.value < *verdict.curve_value) {
        verdict.verdict = CurveVerdict::below;
        ++out.below;
      } else {
        verdict.verdict = CurveVerdict::above;  // ties count as above
        ++out.above;
      }
    }
    out.verdicts.push_back(std::move(verdict));
  }
  return out;
}

}  // namespace oaudit
