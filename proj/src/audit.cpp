#include "oaudit/audit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "oaudit/errors.hpp"
#include "oaudit/util.hpp"

namespace oaudit {

namespace {
constexpr double kDenominatorEpsilon = 1e-12;
}

const char* group_kind_name(GroupKind k) {
  switch (k) {
    case GroupKind::binary: return "binary";
    case GroupKind::intersection: return "intersection";
    case GroupKind::set_union: return "union";
    case GroupKind::outlier: return "outlier";
  }
  return "unknown";
}

const char* breakdown_kind_name(BreakdownKind k) {
  switch (k) {
    case BreakdownKind::marginalized: return "marginalized";
    case BreakdownKind::binary: return "binary";
    case BreakdownKind::intersectional: return "intersectional";
    case BreakdownKind::outlier: return "outlier";
  }
  return "unknown";
}

BreakdownKind breakdown_kind_from_string(const std::string& s) {
  if (s == "marginalized") return BreakdownKind::marginalized;
  if (s == "binary") return BreakdownKind::binary;
  if (s == "intersectional") return BreakdownKind::intersectional;
  if (s == "outlier") return BreakdownKind::outlier;
  fail(errc::config, "unknown breakdown schema '" + s + "'");
}

MarginalizedUnions default_marginalized_unions() {
  // Jigsaw-style channel names; override per dataset via config.
  return {
      {"people_of_color", {"black", "latino", "asian", "other_race_or_ethnicity"}},
      {"gender_minorities", {"female", "other_gender"}},
      {"sexual_minorities", {"homosexual_gay_or_lesbian", "bisexual", "other_sexual_orientation"}},
      {"religious_minorities", {"atheist", "buddhist", "hindu", "jewish", "muslim", "other_religion"}},
      {"disabled_people",
       {"intellectual_or_learning_disability", "physical_disability", "psychiatric_or_mental_illness",
        "other_disability"}},
  };
}

std::vector<std::uint8_t> membership_mask(const DatasetTable& table, const GroupSpec& group,
                                          const OutlierAssignment* assignment) {
  const std::size_t n = table.n_rows();
  std::vector<std::uint8_t> mask(n, 0);
  switch (group.kind) {
    case GroupKind::binary: {
      if (group.members.size() != 1) fail(errc::config, "binary group '" + group.name + "' needs one member");
      const std::size_t chan = table.channel_index(group.members[0]);
      for (std::size_t r = 0; r < n; ++r) mask[r] = table.binary(r, chan) == 1;
      break;
    }
    case GroupKind::intersection: {
      if (group.members.size() < 2) {
        fail(errc::config, "intersection group '" + group.name + "' needs at least two members");
      }
      std::vector<std::size_t> chans;
      for (const auto& m : group.members) chans.push_back(table.channel_index(m));
      for (std::size_t r = 0; r < n; ++r) {
        std::uint8_t all = 1;
        for (std::size_t c : chans) all &= static_cast<std::uint8_t>(table.binary(r, c) == 1);
        mask[r] = all;
      }
      break;
    }
    case GroupKind::set_union: {
      if (group.members.empty()) fail(errc::config, "union group '" + group.name + "' has no members");
      std::vector<std::size_t> chans;
      for (const auto& m : group.members) chans.push_back(table.channel_index(m));
      for (std::size_t r = 0; r < n; ++r) {
        std::uint8_t any = 0;
        for (std::size_t c : chans) any |= static_cast<std::uint8_t>(table.binary(r, c) == 1);
        mask[r] = any;
      }
      break;
    }
    case GroupKind::outlier: {
      if (assignment == nullptr) {
        fail(errc::config, "outlier group '" + group.name + "' requires a detection assignment");
      }
      if (group.members.size() != 1) fail(errc::config, "outlier group '" + group.name + "' needs one space");
      const Space space = space_from_string(group.members[0]);
      for (std::size_t r = 0; r < n; ++r) mask[r] = assignment->flag(space, r);
      break;
    }
  }
  return mask;
}

std::size_t mask_count(const std::vector<std::uint8_t>& mask) {
  std::size_t c = 0;
  for (auto m : mask) c += m;
  return c;
}

BreakdownSchema enumerate_groups(const DatasetTable& table, BreakdownKind kind, std::size_t min_support,
                                 const MarginalizedUnions& unions, const OutlierAssignment* assignment) {
  if (!table.binarized()) fail(errc::config, "enumerate_groups requires apply_binarize() first");
  BreakdownSchema schema;
  schema.name = kind;
  const auto& demo = table.demographic_names();
  switch (kind) {
    case BreakdownKind::binary: {
      for (const auto& name : demo) {
        schema.groups.push_back({name, GroupKind::binary, {name}, min_support});
      }
      break;
    }
    case BreakdownKind::intersectional: {
      for (std::size_t a = 0; a < demo.size(); ++a) {
        for (std::size_t b = a + 1; b < demo.size(); ++b) {
          GroupSpec g{demo[a] + "&" + demo[b], GroupKind::intersection, {demo[a], demo[b]}, min_support};
          if (min_support > 0) {
            if (mask_count(membership_mask(table, g)) < min_support) continue;
          }
          schema.groups.push_back(std::move(g));
        }
      }
      break;
    }
    case BreakdownKind::marginalized: {
      // Unions are restricted to channels that exist in this schema; a union
      // with none is dropped so non-default schemas still audit cleanly.
      for (const auto& [name, members] : unions) {
        std::vector<std::string> present;
        for (const auto& m : members) {
          if (table.has_channel(m)) present.push_back(m);
        }
        if (present.empty()) continue;
        schema.groups.push_back({name, GroupKind::set_union, present, min_support});
      }
      break;
    }
    case BreakdownKind::outlier: {
      if (assignment == nullptr) fail(errc::config, "outlier breakdown requires a detection assignment");
      for (const auto& [space, result] : assignment->per_space) {
        (void)result;
        schema.groups.push_back({std::string(space_name(space)) + "_outliers",
                                 GroupKind::outlier,
                                 {space_name(space)},
                                 min_support});
      }
      break;
    }
  }
  return schema;
}

MseSplit mse(const DatasetTable& table, const std::vector<std::uint8_t>& mask,
             const std::string& model_id, const std::string& toxicity_type,
             const std::string& group_name) {
  const std::size_t score_chan = table.channel_index(score_channel_name(model_id, toxicity_type));
  const std::size_t truth_chan = table.channel_index(toxicity_type);
  MseSplit split;
  double sum_in = 0.0;
  double sum_out = 0.0;
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    if (!table.has_value(r, score_chan)) continue;
    const double e = table.value(r, score_chan) - table.value(r, truth_chan);
    if (mask[r]) {
      sum_in += e * e;
      ++split.n_in;
    } else {
      sum_out += e * e;
      ++split.n_out;
    }
  }
  if (split.n_in == 0 || split.n_out == 0) {
    fail(errc::degenerate, "group '" + group_name + "' has an empty side for " + model_id + "/" +
                               toxicity_type + " (in=" + std::to_string(split.n_in) +
                               ", out=" + std::to_string(split.n_out) + ")");
  }
  split.mse_in = sum_in / static_cast<double>(split.n_in);
  split.mse_out = sum_out / static_cast<double>(split.n_out);
  return split;
}

std::optional<double> relative_mse_diff(double mse_in, double mse_out) {
  if (mse_out <= kDenominatorEpsilon) return std::nullopt;
  return (mse_in - mse_out) / mse_out;
}

double freq(const DatasetTable& table, const std::vector<std::uint8_t>& mask,
            const std::string& toxicity_type, const std::string& group_name) {
  const std::size_t chan = table.channel_index(toxicity_type);
  std::size_t members = 0;
  std::size_t positives = 0;
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    if (!mask[r]) continue;
    ++members;
    positives += table.binary(r, chan) == 1;
  }
  if (members == 0) fail(errc::degenerate, "group '" + group_name + "' is empty");
  return static_cast<double>(positives) / static_cast<double>(members);
}

WmseResult wmse(const DatasetTable& table, const GroupSpec& group, const std::vector<std::string>& model_ids,
                const std::vector<std::string>& toxicity_types, const OutlierAssignment* assignment) {
  const std::vector<std::uint8_t> mask = membership_mask(table, group, assignment);
  WmseResult result;
  result.group = group;
  result.group_size = mask_count(mask);

  for (const auto& model : model_ids) {
    for (const auto& type : toxicity_types) {
      if (!table.has_channel(score_channel_name(model, type))) continue;
      const MseSplit split = mse(table, mask, model, type, group.name);
      const auto rel = relative_mse_diff(split.mse_in, split.mse_out);
      if (!rel) {
        result.skipped_types.push_back(model + "/" + type);
        continue;
      }
      WmseTerm term;
      term.toxicity_type = type;
      term.model_id = model;
      term.frequency = freq(table, mask, type, group.name);
      term.mse_in = split.mse_in;
      term.mse_out = split.mse_out;
      term.relative_diff = *rel;
      result.terms.push_back(term);
    }
  }
  if (result.terms.empty()) {
    fail(errc::degenerate, "group '" + group.name + "': every score channel was skipped");
  }
  double value = 0.0;
  for (const auto& t : result.terms) value += t.frequency * t.relative_diff;
  result.value = value;
  return result;
}

double percentile_rank(double target, const std::vector<double>& pool) {
  if (pool.empty()) fail(errc::config, "percentile_rank: empty pool");
  std::size_t at_or_below = 0;
  bool contains_target = false;
  for (double v : pool) {
    if (v <= target) ++at_or_below;
    if (v == target) contains_target = true;
  }
  if (!contains_target) fail(errc::config, "percentile_rank: pool must contain the target value");
  return 100.0 * static_cast<double>(at_or_below) / static_cast<double>(pool.size());
}

ToxicityGap toxicity_gap(const DatasetTable& table, const OutlierAssignment& assignment, Space space,
                         const std::string& toxicity_type) {
  const std::size_t chan = table.channel_index(toxicity_type);
  double sum_in = 0.0, sum_out = 0.0;
  std::size_t n_in = 0, n_out = 0;
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    if (assignment.flag(space, r)) {
      sum_in += table.value(r, chan);
      ++n_in;
    } else {
      sum_out += table.value(r, chan);
      ++n_out;
    }
  }
  if (n_in == 0 || n_out == 0) {
    fail(errc::degenerate, std::string("toxicity_gap: empty side for space ") + space_name(space));
  }
  ToxicityGap gap;
  gap.mean_in = sum_in / static_cast<double>(n_in);
  gap.mean_out = sum_out / static_cast<double>(n_out);
  if (gap.mean_out > kDenominatorEpsilon) {
    gap.relative_pct = (gap.mean_in - gap.mean_out) / gap.mean_out * 100.0;
  }
  return gap;
}

SignificanceCounts count_significant_groups(const DatasetTable& table, const OutlierAssignment& assignment,
                                            const std::vector<Space>& spaces,
                                            const std::vector<std::string>& toxicity_types, double alpha) {
  const auto& groups = table.demographic_names();
  SignificanceCounts out;
  out.alpha = alpha;
  out.bonferroni_m = groups.size() * toxicity_types.size() * spaces.size();
  if (out.bonferroni_m == 0) fail(errc::config, "count_significant_groups: nothing to test");
  const double cutoff = alpha / static_cast<double>(out.bonferroni_m);

  for (Space space : spaces) {
    const LofResult& lof = assignment.per_space.at(space);
    for (const auto& type : toxicity_types) {
      const std::size_t type_chan = table.channel_index(type);
      std::size_t significant = 0;
      for (const auto& group_name : groups) {
        const std::size_t group_chan = table.channel_index(group_name);
        std::uint64_t cells[2][2] = {{0, 0}, {0, 0}};
        for (std::size_t r = 0; r < table.n_rows(); ++r) {
          if (table.binary(r, group_chan) != 1) continue;
          const int row_idx = lof.flags[r] ? 1 : 0;            // row 1 = outlier
          const int col = table.binary(r, type_chan) == 1 ? 0 : 1;  // col 0 = positive label
          ++cells[row_idx][col];
        }
        const auto chi = chi_square_homogeneity(cells[1][0], cells[1][1], cells[0][0], cells[0][1]);
        if (!chi) {
          ++out.undefined_tests;
          continue;
        }
        SignificanceResult res;
        res.group = group_name;
        res.toxicity_type = type;
        res.space = space;
        res.chi2 = chi->chi2;
        res.p_value = chi->p_value;
        res.significant_after_bonferroni = chi->p_value < cutoff;
        significant += res.significant_after_bonferroni;
        out.results.push_back(std::move(res));
      }
      out.counts[{space_name(space), type}] = significant;
    }
  }
  return out;
}

std::vector<MseTableRow> mse_table(const DatasetTable& table, const OutlierAssignment& assignment,
                                   Space space, const std::vector<std::string>& model_ids,
                                   const std::vector<std::string>& toxicity_types) {
  const LofResult& lof = assignment.per_space.at(space);
  std::vector<std::uint8_t> mask(lof.flags.begin(), lof.flags.end());
  std::vector<MseTableRow> rows;
  for (const auto& model : model_ids) {
    for (const auto& type : toxicity_types) {
      if (!table.has_channel(score_channel_name(model, type))) continue;
      const MseSplit split = mse(table, mask, model, type, std::string(space_name(space)) + "_outliers");
      MseTableRow row;
      row.toxicity_type = type;
      row.model_id = model;
      row.outlier_mse = split.mse_in;
      row.non_outlier_mse = split.mse_out;
      const double total = split.mse_in * static_cast<double>(split.n_in) +
                           split.mse_out * static_cast<double>(split.n_out);
      row.overall_mse = total / static_cast<double>(split.n_in + split.n_out);
      const auto rel = relative_mse_diff(split.mse_in, split.mse_out);
      if (rel) row.pct_increase = *rel * 100.0;
      rows.push_back(std::move(row));
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const MseTableRow& a, const MseTableRow& b) {
    const double av = a.pct_increase.value_or(-std::numeric_limits<double>::infinity());
    const double bv = b.pct_increase.value_or(-std::numeric_limits<double>::infinity());
    return av > bv;
  });
  return rows;
}

}  // namespace oaudit
