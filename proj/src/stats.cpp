#include "oaudit/stats.hpp"

#include <cmath>

namespace oaudit {

std::optional<Chi2Result> chi_square_homogeneity(std::uint64_t a_pos, std::uint64_t a_neg,
                                                 std::uint64_t b_pos, std::uint64_t b_neg) {
  const double a = static_cast<double>(a_pos);
  const double b = static_cast<double>(a_neg);
  const double c = static_cast<double>(b_pos);
  const double d = static_cast<double>(b_neg);
  const double row1 = a + b;
  const double row2 = c + d;
  const double col1 = a + c;
  const double col2 = b + d;
  if (row1 == 0.0 || row2 == 0.0 || col1 == 0.0 || col2 == 0.0) return std::nullopt;

  const double n = row1 + row2;
  const double det = a * d - b * c;
  const double chi2 = n * det * det / (row1 * row2 * col1 * col2);
  const double p = std::erfc(std::sqrt(chi2 / 2.0));  // exact for df = 1
  return Chi2Result{chi2, p};
}

double welch_normal_p(double mean1, double var1, std::size_t n1, double mean2, double var2,
                      std::size_t n2) {
  if (n1 == 0 || n2 == 0) return 1.0;
  const double se_sq = var1 / static_cast<double>(n1) + var2 / static_cast<double>(n2);
  if (se_sq <= 0.0) return mean1 == mean2 ? 1.0 : 0.0;
  const double t = (mean1 - mean2) / std::sqrt(se_sq);
  return std::erfc(std::abs(t) / std::sqrt(2.0));
}

}  // namespace oaudit
