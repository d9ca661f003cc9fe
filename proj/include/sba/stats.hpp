#pragma once

#include <span>

namespace sba {

double mean(std::span<const double> values);

/// Population standard deviation (divides by n); 0 for a single value.
double population_stddev(std::span<const double> values);

/// Standard normal CDF.
double normal_cdf(double x);

enum class TTestStatus {
  ok,
  degenerate,  // zero variance with a nonzero mean: no p-value
};

struct TTestResult {
  TTestStatus status = TTestStatus::ok;
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;  // two-sided; meaningless when degenerate
  double mean_difference = 0.0;

  bool significant(double alpha = 0.05) const { return status == TTestStatus::ok && p < alpha; }
};

/// Paired t-test on per-fold differences: t = mean / (sd / sqrt(n)),
/// df = n - 1, two-sided p. All-zero differences give t = 0, p = 1.
/// Throws DataError with fewer than 2 differences.
TTestResult paired_ttest(std::span<const double> differences);

}  // namespace sba
