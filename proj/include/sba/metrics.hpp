#pragma once

#include <cstddef>
#include <span>

namespace sba {

/// Positive class is CI (or depressed for the depression task).
struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
  std::size_t fp = 0;
};

ConfusionCounts confusion(std::span<const int> predictions, std::span<const int> labels);

struct MetricReport {
  double accuracy = 0.0;
  double uar = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
};

/// uar is computed as (sensitivity + specificity) / 2. Throws DataError when
/// either class is empty.
MetricReport core_metrics(const ConfusionCounts& counts);

}  // namespace sba
