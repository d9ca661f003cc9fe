#include "sba/scores.hpp"

#include <string>

#include "sba/error.hpp"

namespace sba {

std::string_view to_string(ClassifierKind k) {
  switch (k) {
    case ClassifierKind::svm: return "svm";
    case ClassifierKind::rf: return "rf";
    case ClassifierKind::mlp: return "mlp";
  }
  return "svm";
}

ClassifierKind parse_classifier(std::string_view text) {
  if (text == "svm") return ClassifierKind::svm;
  if (text == "rf") return ClassifierKind::rf;
  if (text == "mlp") return ClassifierKind::mlp;
  throw ConfigError("unknown classifier '" + std::string(text) + "' (expected svm, rf or mlp)");
}

double decision_threshold(ClassifierKind kind) { return kind == ClassifierKind::svm ? 0.0 : 0.5; }

ScoreSet make_score_set(std::vector<double> scores, ClassifierKind kind) {
  ScoreSet s;
  s.model = kind;
  s.threshold = decision_threshold(kind);
  s.predictions.reserve(scores.size());
  for (double v : scores) s.predictions.push_back(v >= s.threshold ? 1 : 0);
  s.scores = std::move(scores);
  return s;
}

}  // namespace sba
