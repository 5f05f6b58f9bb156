#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "oaudit/dataset.hpp"
#include "oaudit/lof.hpp"
#include "oaudit/stats.hpp"

namespace oaudit {

enum class GroupKind { binary, intersection, set_union, outlier };
const char* group_kind_name(GroupKind k);

// A named predicate over binary columns (or an outlier flag) defining a
// subgroup of the dataset.
struct GroupSpec {
  std::string name;
  GroupKind kind = GroupKind::binary;
  std::vector<std::string> members;  // channel names; outlier kind uses space_name
  std::size_t min_support = 0;
};

enum class BreakdownKind { marginalized, binary, intersectional, outlier };
const char* breakdown_kind_name(BreakdownKind k);
BreakdownKind breakdown_kind_from_string(const std::string& s);

struct BreakdownSchema {
  BreakdownKind name;
  std::vector<GroupSpec> groups;
};

// Named channel-union definitions for the marginalized breakdown.
using MarginalizedUnions = std::vector<std::pair<std::string, std::vector<std::string>>>;
MarginalizedUnions default_marginalized_unions();

// Row membership mask for a group. Requires binarized table; outlier groups
// additionally need the assignment.
std::vector<std::uint8_t> membership_mask(const DatasetTable& table, const GroupSpec& group,
                                          const OutlierAssignment* assignment = nullptr);

std::size_t mask_count(const std::vector<std::uint8_t>& mask);

BreakdownSchema enumerate_groups(const DatasetTable& table, BreakdownKind kind,
                                 std::size_t min_support,
                                 const MarginalizedUnions& unions = default_marginalized_unions(),
                                 const OutlierAssignment* assignment = nullptr);

struct MseSplit {
  double mse_in = 0.0;
  double mse_out = 0.0;
  std::size_t n_in = 0;
  std::size_t n_out = 0;
};

// Mean squared error of a model's score against the decimal ground truth,
// split by group membership. Rows with an absent score are excluded.
MseSplit mse(const DatasetTable& table, const std::vector<std::uint8_t>& mask,
             const std::string& model_id, const std::string& toxicity_type,
             const std::string& group_name);

// (mse_in - mse_out) / mse_out; nullopt signals a skipped zero-denominator
// term rather than an error.
std::optional<double> relative_mse_diff(double mse_in, double mse_out);

// Proportion of group rows whose binary ground-truth label is positive.
double freq(const DatasetTable& table, const std::vector<std::uint8_t>& mask,
            const std::string& toxicity_type, const std::string& group_name);

struct WmseTerm {
  std::string toxicity_type;
  std::string model_id;
  double frequency = 0.0;
  double mse_in = 0.0;
  double mse_out = 0.0;
  double relative_diff = 0.0;
};

struct WmseResult {
  GroupSpec group;
  std::size_t group_size = 0;
  double value = 0.0;
  std::vector<WmseTerm> terms;
  std::vector<std::string> skipped_types;  // zero-denominator (model, type) channels
};

// Frequency-weighted sum of relative MSE differences over every
// (model, toxicity type) score channel given. Positive means the model
// serves the group worse than its complement.
WmseResult wmse(const DatasetTable& table, const GroupSpec& group, const std::vector<std::string>& model_ids,
                const std::vector<std::string>& toxicity_types, const OutlierAssignment* assignment = nullptr);

// 100 * |{h : pool[h] <= target}| / |pool|. The pool must contain the target.
double percentile_rank(double target, const std::vector<double>& pool);

struct ToxicityGap {
  double mean_in = 0.0;
  double mean_out = 0.0;
  std::optional<double> relative_pct;  // nullopt when mean_out ~ 0
};

ToxicityGap toxicity_gap(const DatasetTable& table, const OutlierAssignment& assignment, Space space,
                         const std::string& toxicity_type);

struct SignificanceResult {
  std::string group;
  std::string toxicity_type;
  Space space = Space::demographic;
  double chi2 = 0.0;
  double p_value = 1.0;
  bool significant_after_bonferroni = false;
};

struct SignificanceCounts {
  // (space, type) -> number of demographic groups with a significant
  // outlier/non-outlier difference after Bonferroni.
  std::map<std::pair<std::string, std::string>, std::size_t> counts;
  std::vector<SignificanceResult> results;  // defined tests only
  std::size_t bonferroni_m = 0;             // |groups| * |types| * |spaces|
  std::size_t undefined_tests = 0;
  double alpha = 0.05;
};

SignificanceCounts count_significant_groups(const DatasetTable& table, const OutlierAssignment& assignment,
                                            const std::vector<Space>& spaces,
                                            const std::vector<std::string>& toxicity_types, double alpha);

struct MseTableRow {
  std::string toxicity_type;
  std::string model_id;
  double overall_mse = 0.0;
  double outlier_mse = 0.0;
  double non_outlier_mse = 0.0;
  std::optional<double> pct_increase;  // nullopt when non-outlier MSE ~ 0
};

// One row per (model, type), sorted by pct_increase descending.
std::vector<MseTableRow> mse_table(const DatasetTable& table, const OutlierAssignment& assignment,
                                   Space space, const std::vector<std::string>& model_ids,
                                   const std::vector<std::string>& toxicity_types);

}  // namespace oaudit
