#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sba/stats.hpp"

namespace sba {

enum class Dimension { gender, age_group, depression };

std::string_view to_string(Dimension d);
Dimension parse_dimension(std::string_view text);

struct SubgroupKey {
  Dimension dimension = Dimension::gender;
  std::string value;  // "M", "F", "1", "2", "depressed", "non_depressed"

  friend bool operator==(const SubgroupKey&, const SubgroupKey&) = default;
};

/// Subgroup-specific sensitivity and specificity. A metric whose class is
/// absent from the subgroup is left empty (undefined), never zero.
struct SubgroupReport {
  SubgroupKey key;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  std::optional<double> sensitivity;
  std::optional<double> specificity;
  std::optional<double> delta;  // specificity - sensitivity
};

/// Metrics over samples with `in_group[i]`. Throws DataError if the subgroup
/// is empty.
SubgroupReport subgroup_metrics(std::span<const int> predictions, std::span<const int> labels,
                                std::span<const bool> in_group, SubgroupKey key);

/// Builds a report from already-aggregated metrics; delta is their exact
/// difference when both are present.
SubgroupReport make_subgroup_report(SubgroupKey key, std::size_t n_pos, std::size_t n_neg,
                                    std::optional<double> sensitivity, std::optional<double> specificity);

/// Inter-group disparity for an ordered pair (A, B): metric_A - metric_B.
struct DisparityReport {
  SubgroupKey a;
  SubgroupKey b;
  std::optional<double> delta_sens;
  std::optional<double> delta_spec;
  std::optional<TTestResult> test_sens;
  std::optional<TTestResult> test_spec;

  bool significant(double alpha = 0.05) const;
};

/// Throws DataError if any constituent metric is undefined.
DisparityReport disparity(const SubgroupReport& a, const SubgroupReport& b);

/// Like disparity() but leaves a difference empty when either side is
/// undefined.
DisparityReport disparity_partial(const SubgroupReport& a, const SubgroupReport& b);

/// P(score_pos > score_neg) with ties counted 1/2, via mid-ranks.
/// Throws DataError if either side is empty.
double auc(std::span<const double> positive_scores, std::span<const double> negative_scores);

struct AucReport {
  double auc = 0.5;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  std::size_t pairs = 0;
};

/// AUC over samples with `in_group[i]`.
AucReport auc_subgroup(std::span<const double> scores, std::span<const int> labels, std::span<const bool> in_group);

/// Normalised per-class histograms on shared bins spanning the pooled range.
struct ScoreDistribution {
  std::vector<double> edges;  // n_bins + 1
  std::vector<double> positive_mass;
  std::vector<double> negative_mass;
  double overlap = 0.0;  // sum_i min(p_i, q_i)
};

inline constexpr std::size_t kDefaultHistogramBins = 30;

ScoreDistribution score_distribution(std::span<const double> positive_scores,
                                     std::span<const double> negative_scores,
                                     std::size_t n_bins = kDefaultHistogramBins);

/// sum_i min(p_i, q_i) for two mass vectors of equal length.
double overlap_coefficient(std::span<const double> p, std::span<const double> q);

}  // namespace sba
