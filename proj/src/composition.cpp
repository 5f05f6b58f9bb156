#include "oaudit/composition.hpp"

#include <algorithm>

#include "oaudit/errors.hpp"
#include "oaudit/stats.hpp"

namespace oaudit {

std::vector<CompositionRow> outlier_proportion_per_group(const DatasetTable& table,
                                                         const OutlierAssignment& assignment,
                                                         Space space) {
  const LofResult& lof = assignment.per_space.at(space);
  const std::size_t n = table.n_rows();
  const double baseline = static_cast<double>(lof.flagged_count()) / static_cast<double>(n);

  std::vector<CompositionRow> rows;
  for (const auto& name : table.demographic_names()) {
    const std::size_t chan = table.channel_index(name);
    CompositionRow row;
    row.group = name;
    row.baseline = baseline;
    for (std::size_t r = 0; r < n; ++r) {
      if (table.binary(r, chan) != 1) continue;
      ++row.n_members;
      row.n_outliers += lof.flags[r] ? 1 : 0;
    }
    if (row.n_members > 0) {
      row.proportion = static_cast<double>(row.n_outliers) / static_cast<double>(row.n_members);
    }
    rows.push_back(std::move(row));
  }
  std::stable_sort(rows.begin(), rows.end(), [](const CompositionRow& a, const CompositionRow& b) {
    return a.proportion.value_or(-1.0) > b.proportion.value_or(-1.0);
  });
  return rows;
}

IdentityCountStats mean_identity_count(const DatasetTable& table, const OutlierAssignment& assignment,
                                       Space space) {
  const LofResult& lof = assignment.per_space.at(space);
  std::vector<std::size_t> demo_chans;
  for (const auto& name : table.demographic_names()) demo_chans.push_back(table.channel_index(name));

  double sum_in = 0.0, sum_out = 0.0, sumsq_in = 0.0, sumsq_out = 0.0;
  std::size_t n_in = 0, n_out = 0;
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    double count = 0.0;
    for (std::size_t c : demo_chans) count += table.binary(r, c) == 1 ? 1.0 : 0.0;
    if (lof.flags[r]) {
      sum_in += count;
      sumsq_in += count * count;
      ++n_in;
    } else {
      sum_out += count;
      sumsq_out += count * count;
      ++n_out;
    }
  }
  if (n_in == 0 || n_out == 0) {
    fail(errc::degenerate, std::string("mean_identity_count: empty side for space ") + space_name(space));
  }
  IdentityCountStats stats;
  stats.mean_in = sum_in / static_cast<double>(n_in);
  stats.mean_out = sum_out / static_cast<double>(n_out);
  auto sample_var = [](double sum, double sumsq, std::size_t n) {
    if (n < 2) return 0.0;
    const double mean = sum / static_cast<double>(n);
    return std::max(0.0, (sumsq - static_cast<double>(n) * mean * mean) / static_cast<double>(n - 1));
  };
  stats.p_value = welch_normal_p(stats.mean_in, sample_var(sum_in, sumsq_in, n_in), n_in, stats.mean_out,
                                 sample_var(sum_out, sumsq_out, n_out), n_out);
  return stats;
}

}  // namespace oaudit
