#include "sba/metrics.hpp"

#include "sba/error.hpp"

namespace sba {

ConfusionCounts confusion(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) throw DataError("prediction and label counts differ");
  ConfusionCounts c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool truth = labels[i] != 0;
    const bool pred = predictions[i] != 0;
    if (truth) {
      ++(pred ? c.tp : c.fn);
    } else {
      ++(pred ? c.fp : c.tn);
    }
  }
  return c;
}

MetricReport core_metrics(const ConfusionCounts& c) {
  const std::size_t pos = c.tp + c.fn;
  const std::size_t neg = c.tn + c.fp;
  if (pos == 0) throw DataError("sensitivity undefined: no positive samples");
  if (neg == 0) throw DataError("specificity undefined: no negative samples");
  MetricReport r;
  r.sensitivity = static_cast<double>(c.tp) / static_cast<double>(pos);
  r.specificity = static_cast<double>(c.tn) / static_cast<double>(neg);
  r.uar = (r.sensitivity + r.specificity) / 2.0;
  r.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(pos + neg);
  return r;
}

}  // namespace sba
