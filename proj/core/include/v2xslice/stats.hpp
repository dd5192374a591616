#ifndef V2XSLICE_STATS_HPP_
#define V2XSLICE_STATS_HPP_

#include <cstdint>
#include <span>
#include <vector>

namespace v2xslice::stats {

double mean(std::span<const double> x);
/// Unbiased sample variance (n - 1); 0 for fewer than two values.
double variance(std::span<const double> x);

struct TTest {
  double t = 0.0;
  double df = 0.0;
  double p_greater = 1.0;  // H1: mean(a) > mean(b)
  double p_two_sided = 1.0;
};

/// Welch's unequal-variance two-sample t-test.
TTest welch(std::span<const double> a, std::span<const double> b);

struct ChiSquare {
  double statistic = 0.0;
  int df = 0;
  double p = 1.0;
};

/// Goodness of fit of observed counts against equal expected counts.
ChiSquare chi_square_uniform(std::span<const std::int64_t> counts);

struct Spearman {
  double rho = 0.0;
  double p_two_sided = 1.0;
  double p_greater = 1.0;  // H1: rho > 0
};

/// Rank correlation with average ranks for ties; p from the t approximation.
Spearman spearman(std::span<const double> x, std::span<const double> y);

/// Average ranks (1-based).
std::vector<double> ranks(std::span<const double> x);

}  // namespace v2xslice::stats

#endif  // V2XSLICE_STATS_HPP_
