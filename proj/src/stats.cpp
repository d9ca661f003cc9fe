#include "sba/stats.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "sba/error.hpp"

namespace sba {

double mean(std::span<const double> values) {
  if (values.empty()) throw DataError("mean of an empty sample");
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double population_stddev(std::span<const double> values) {
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size()));
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

TTestResult paired_ttest(std::span<const double> differences) {
  const std::size_t n = differences.size();
  if (n < 2) throw DataError("paired t-test needs at least 2 folds");
  TTestResult r;
  r.df = static_cast<double>(n - 1);
  r.mean_difference = mean(differences);
  double ss = 0.0;
  for (double d : differences) ss += (d - r.mean_difference) * (d - r.mean_difference);
  const double sd = std::sqrt(ss / r.df);
  // Rounding in the mean can leave a residue for identical folds.
  if (sd <= 1e-12 * std::max(1.0, std::abs(r.mean_difference))) {
    if (r.mean_difference == 0.0) {
      r.t = 0.0;
      r.p = 1.0;
    } else {
      r.status = TTestStatus::degenerate;
      r.t = std::copysign(std::numeric_limits<double>::infinity(), r.mean_difference);
      r.p = std::numeric_limits<double>::quiet_NaN();
    }
    return r;
  }
  r.t = r.mean_difference / (sd / std::sqrt(static_cast<double>(n)));
  const boost::math::students_t dist(r.df);
  r.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
  return r;
}

}  // namespace sba
