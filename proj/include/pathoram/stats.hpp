#pragma once

#include <cstdint>
#include <span>

namespace pathoram::stats {

struct ChiSquareResult {
  double statistic = 0.0;
  std::uint64_t degrees_of_freedom = 0;
  double critical_value = 0.0;  // upper quantile at the supplied significance
  bool pass = false;            // statistic <= critical_value
};

/// Upper critical value: P(X > value) = significance for X ~ chi^2(df).
double chi_square_critical(std::uint64_t df, double significance);

/// Goodness-of-fit against the uniform distribution over counts.size() cells.
ChiSquareResult uniformity_test(std::span<const std::uint64_t> counts,
                                double significance);

/// Two-sample homogeneity test; cells empty in both samples are dropped.
ChiSquareResult two_sample_test(std::span<const std::uint64_t> a,
                                std::span<const std::uint64_t> b, double significance);

}  // namespace pathoram::stats
