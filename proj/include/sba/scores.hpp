#pragma once

#include <string_view>
#include <vector>

namespace sba {

enum class ClassifierKind { svm, rf, mlp };

std::string_view to_string(ClassifierKind k);
ClassifierKind parse_classifier(std::string_view text);

/// SVM decision values are thresholded at 0, vote fractions and sigmoid
/// outputs at 0.5.
double decision_threshold(ClassifierKind kind);

/// Continuous scores with the hard predictions they imply.
struct ScoreSet {
  std::vector<double> scores;
  std::vector<int> predictions;  // 1 iff score >= threshold
  ClassifierKind model = ClassifierKind::svm;
  double threshold = 0.0;
};

ScoreSet make_score_set(std::vector<double> scores, ClassifierKind kind);

}  // namespace sba
