#pragma once

#include <cstdint>
#include <optional>

namespace oaudit {

struct Chi2Result {
  double chi2;
  double p_value;
};

// Pearson chi-square of homogeneity on a 2x2 table, no continuity
// correction, df = 1, p = erfc(sqrt(chi2 / 2)). Returns nullopt when a
// marginal is zero (test undefined).
std::optional<Chi2Result> chi_square_homogeneity(std::uint64_t a_pos, std::uint64_t a_neg,
                                                 std::uint64_t b_pos, std::uint64_t b_neg);

// Two-sided Welch test with a normal approximation. Zero pooled variance
// collapses to p = 1 when the means agree, p = 0 otherwise.
double welch_normal_p(double mean1, double var1, std::size_t n1, double mean2, double var2,
                      std::size_t n2);

}  // namespace oaudit
