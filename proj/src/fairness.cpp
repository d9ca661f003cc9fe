#include "sba/fairness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sba/error.hpp"

namespace sba {

std::string_view to_string(Dimension d) {
  switch (d) {
    case Dimension::gender: return "gender";
    case Dimension::age_group: return "age_group";
    case Dimension::depression: return "depression";
  }
  return "gender";
}

Dimension parse_dimension(std::string_view text) {
  if (text == "gender") return Dimension::gender;
  if (text == "age_group" || text == "age") return Dimension::age_group;
  if (text == "depression") return Dimension::depression;
  throw ConfigError("unknown bias dimension '" + std::string(text) + "'");
}

SubgroupReport make_subgroup_report(SubgroupKey key, std::size_t n_pos, std::size_t n_neg,
                                    std::optional<double> sensitivity, std::optional<double> specificity) {
  SubgroupReport r{std::move(key), n_pos, n_neg, sensitivity, specificity, std::nullopt};
  if (sensitivity && specificity) r.delta = *specificity - *sensitivity;
  return r;
}

SubgroupReport subgroup_metrics(std::span<const int> predictions, std::span<const int> labels,
                                std::span<const bool> in_group, SubgroupKey key) {
  if (predictions.size() != labels.size() || labels.size() != in_group.size()) {
    throw DataError("subgroup inputs have different lengths");
  }
  std::size_t pos = 0, neg = 0, tp = 0, tn = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!in_group[i]) continue;
    if (labels[i]) {
      ++pos;
      tp += predictions[i] ? 1 : 0;
    } else {
      ++neg;
      tn += predictions[i] ? 0 : 1;
    }
  }
  if (pos + neg == 0) throw DataError("subgroup " + std::string(to_string(key.dimension)) + "=" + key.value + " is empty");
  std::optional<double> se, sp;
  if (pos > 0) se = static_cast<double>(tp) / static_cast<double>(pos);
  if (neg > 0) sp = static_cast<double>(tn) / static_cast<double>(neg);
  return make_subgroup_report(std::move(key), pos, neg, se, sp);
}

bool DisparityReport::significant(double alpha) const {
  return (test_sens && test_sens->significant(alpha)) || (test_spec && test_spec->significant(alpha));
}

DisparityReport disparity_partial(const SubgroupReport& a, const SubgroupReport& b) {
  DisparityReport d;
  d.a = a.key;
  d.b = b.key;
  if (a.sensitivity && b.sensitivity) d.delta_sens = *a.sensitivity - *b.sensitivity;
  if (a.specificity && b.specificity) d.delta_spec = *a.specificity - *b.specificity;
  return d;
}

DisparityReport disparity(const SubgroupReport& a, const SubgroupReport& b) {
  DisparityReport d = disparity_partial(a, b);
  if (!d.delta_sens || !d.delta_spec) {
    throw DataError("disparity " + a.key.value + " vs " + b.key.value + ": a constituent metric is undefined");
  }
  return d;
}

double auc(std::span<const double> pos, std::span<const double> neg) {
  if (pos.empty() || neg.empty()) throw DataError("AUC needs at least one sample of each class");
  struct Item {
    double score;
    bool positive;
  };
  std::vector<Item> items;
  items.reserve(pos.size() + neg.size());
  for (double s : pos) items.push_back({s, true});
  for (double s : neg) items.push_back({s, false});
  for (const auto& it : items) {
    if (std::isnan(it.score)) throw NumericError("AUC over NaN scores");
  }
  std::sort(items.begin(), items.end(), [](const Item& x, const Item& y) { return x.score < y.score; });

  // Sum of positive mid-ranks, ranks starting at 1; kept doubled to stay integral.
  long double doubled_rank_sum = 0;
  std::size_t i = 0;
  while (i < items.size()) {
    std::size_t j = i;
    std::size_t pos_in_tie = 0;
    while (j < items.size() && items[j].score == items[i].score) {
      pos_in_tie += items[j].positive ? 1 : 0;
      ++j;
    }
    // Ranks i+1 .. j; doubled mid-rank = i + 1 + j.
    doubled_rank_sum += static_cast<long double>(pos_in_tie) * static_cast<long double>(i + 1 + j);
    i = j;
  }
  const auto n_pos = static_cast<long double>(pos.size());
  const auto n_neg = static_cast<long double>(neg.size());
  const long double doubled_u = doubled_rank_sum - n_pos * (n_pos + 1);
  return static_cast<double>(doubled_u / (2 * n_pos * n_neg));
}

AucReport auc_subgroup(std::span<const double> scores, std::span<const int> labels, std::span<const bool> in_group) {
  if (scores.size() != labels.size() || labels.size() != in_group.size()) {
    throw DataError("subgroup inputs have different lengths");
  }
  std::vector<double> pos, neg;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!in_group[i]) continue;
    (labels[i] ? pos : neg).push_back(scores[i]);
  }
  if (pos.empty() || neg.empty()) throw DataError("subgroup AUC needs both classes");
  return AucReport{auc(pos, neg), pos.size(), neg.size(), pos.size() * neg.size()};
}

double overlap_coefficient(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw DataError("overlap of histograms with different bin counts");
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) total += std::min(p[i], q[i]);
  return total;
}

ScoreDistribution score_distribution(std::span<const double> pos, std::span<const double> neg, std::size_t n_bins) {
  if (pos.empty() || neg.empty()) throw DataError("score distribution needs both classes");
  if (n_bins == 0) throw ConfigError("histogram needs at least one bin");
  double lo = pos.front(), hi = pos.front();
  for (auto s : {pos, neg}) {
    for (double v : s) {
      if (!std::isfinite(v)) throw NumericError("non-finite score in distribution");
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  ScoreDistribution d;
  d.edges.resize(n_bins + 1);
  for (std::size_t i = 0; i <= n_bins; ++i) {
    d.edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n_bins);
  }
  d.edges.back() = hi;
  const auto bin_of = [&](double v) -> std::size_t {
    if (hi == lo) return 0;
    const auto b = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(n_bins));
    return std::min(b, n_bins - 1);
  };
  const auto histogram = [&](std::span<const double> s) {
    std::vector<double> mass(n_bins, 0.0);
    for (double v : s) mass[bin_of(v)] += 1.0;
    for (double& m : mass) m /= static_cast<double>(s.size());
    return mass;
  };
  d.positive_mass = histogram(pos);
  d.negative_mass = histogram(neg);
  d.overlap = overlap_coefficient(d.positive_mass, d.negative_mass);
  return d;
}

}  // namespace sba
