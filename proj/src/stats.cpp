#include "pathoram/stats.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include "pathoram/errors.hpp"

namespace pathoram::stats {

double chi_square_critical(std::uint64_t df, double significance) {
  if (df == 0) throw PreconditionError("chi-square needs at least 1 degree of freedom");
  if (significance <= 0.0 || significance >= 1.0) {
    throw PreconditionError("significance must be in (0, 1)");
  }
  boost::math::chi_squared dist(static_cast<double>(df));
  return boost::math::quantile(dist, 1.0 - significance);
}

ChiSquareResult uniformity_test(std::span<const std::uint64_t> counts,
                                double significance) {
  if (counts.size() < 2) throw PreconditionError("need at least 2 cells");
  std::uint64_t total = 0;
  for (std::uint64_t c : counts) total += c;
  if (total == 0) throw PreconditionError("no samples");

  const double expected = static_cast<double>(total) / static_cast<double>(counts.size());
  double stat = 0.0;
  for (std::uint64_t c : counts) {
    const double d = static_cast<double>(c) - expected;
    stat += d * d / expected;
  }
  ChiSquareResult r;
  r.statistic = stat;
  r.degrees_of_freedom = counts.size() - 1;
  r.critical_value = chi_square_critical(r.degrees_of_freedom, significance);
  r.pass = stat <= r.critical_value;
  return r;
}

ChiSquareResult two_sample_test(std::span<const std::uint64_t> a,
                                std::span<const std::uint64_t> b, double significance) {
  if (a.size() != b.size()) throw PreconditionError("samples must share the cell layout");
  std::uint64_t total_a = 0, total_b = 0;
  for (std::uint64_t c : a) total_a += c;
  for (std::uint64_t c : b) total_b += c;
  if (total_a == 0 || total_b == 0) throw PreconditionError("no samples");

  const double grand = static_cast<double>(total_a + total_b);
  double stat = 0.0;
  std::uint64_t used_cells = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::uint64_t cell_total = a[i] + b[i];
    if (cell_total == 0) continue;
    ++used_cells;
    const double ea = static_cast<double>(total_a) * static_cast<double>(cell_total) / grand;
    const double eb = static_cast<double>(total_b) * static_cast<double>(cell_total) / grand;
    const double da = static_cast<double>(a[i]) - ea;
    const double db = static_cast<double>(b[i]) - eb;
    stat += da * da / ea + db * db / eb;
  }
  if (used_cells < 2) throw PreconditionError("need at least 2 occupied cells");

  ChiSquareResult r;
  r.statistic = stat;
  r.degrees_of_freedom = used_cells - 1;
  r.critical_value = chi_square_critical(r.degrees_of_freedom, significance);
  r.pass = stat <= r.critical_value;
  return r;
}

}  // namespace pathoram::stats
