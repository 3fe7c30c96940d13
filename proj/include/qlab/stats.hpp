#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace qlab {

struct ChiSquare {
  double statistic = 0.0;
  std::size_t dof = 0;
  double p_value = 1.0;
};

// Pearson goodness of fit of counts against probabilities (same length).
// Cells with zero expected probability must have zero count.
ChiSquare chi_square(const std::vector<std::uint64_t>& observed, const std::vector<double>& probs);

// The aggregate "within 3 sigma" check used for histograms: |chi2 - dof| <= 3 sqrt(2 dof).
bool chi_square_within_sigma(const ChiSquare& c, double sigmas = 3.0);

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

Interval wilson_interval(double successes, double trials, double z = 1.959963984540054);

// Binomial standard deviation of an empirical frequency.
double binomial_sigma(double p, double trials);

double total_variation(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace qlab
