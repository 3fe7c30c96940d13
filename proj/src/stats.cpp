#include "qlab/stats.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <stdexcept>

namespace qlab {

ChiSquare chi_square(const std::vector<std::uint64_t>& observed, const std::vector<double>& probs) {
  if (observed.size() != probs.size()) throw std::invalid_argument("chi_square: length mismatch");
  double total = 0.0;
  for (auto c : observed) total += static_cast<double>(c);
  ChiSquare out;
  std::size_t cells = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double expected = probs[i] * total;
    if (expected <= 0.0) {
      if (observed[i] != 0) {
        out.statistic = INFINITY;
        out.p_value = 0.0;
        out.dof = observed.size() - 1;
        return out;
      }
      continue;
    }
    const double d = static_cast<double>(observed[i]) - expected;
    out.statistic += d * d / expected;
    ++cells;
  }
  out.dof = cells > 0 ? cells - 1 : 0;
  if (out.dof == 0) {
    out.p_value = 1.0;
    return out;
  }
  boost::math::chi_squared dist(static_cast<double>(out.dof));
  out.p_value = boost::math::cdf(boost::math::complement(dist, out.statistic));
  return out;
}

bool chi_square_within_sigma(const ChiSquare& c, double sigmas) {
  const double dof = static_cast<double>(c.dof);
  return std::abs(c.statistic - dof) <= sigmas * std::sqrt(2.0 * dof);
}

Interval wilson_interval(double successes, double trials, double z) {
  if (trials <= 0) return {0.0, 1.0};
  const double p = successes / trials;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / trials;
  const double centre = (p + z2 / (2.0 * trials)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / trials + z2 / (4.0 * trials * trials)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

double binomial_sigma(double p, double trials) { return std::sqrt(p * (1.0 - p) / trials); }

double total_variation(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("total_variation: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

}  // namespace qlab
