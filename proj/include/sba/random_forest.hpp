#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

namespace sba {

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // x[feature] <= threshold goes left
  std::int32_t left = -1;
  std::int32_t right = -1;
  double positive_fraction = 0.0;  // leaf class mix
};

/// Binary classification tree. A leaf votes positive when strictly more
/// than half of its training samples are positive.
class DecisionTree {
 public:
  DecisionTree() = default;
  explicit DecisionTree(std::vector<TreeNode> nodes);

  /// Single-leaf tree with a fixed vote.
  static DecisionTree constant(bool positive);

  bool vote(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t depth() const;
  std::size_t leaf_count() const;

 private:
  std::vector<TreeNode> nodes_;
};

struct RfOptions {
  std::size_t n_trees = 100;
  std::uint64_t seed = 42;
  std::size_t min_samples_split = 2;
  bool bootstrap = true;
  /// Features examined per split; 0 means floor(sqrt(d)) (at least 1).
  std::size_t max_features = 0;
};

class RfModel {
 public:
  RfModel() = default;
  explicit RfModel(std::vector<DecisionTree> trees);

  /// Fraction of trees voting positive.
  double score(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  Eigen::VectorXd scores(const Eigen::MatrixXd& X) const;
  const std::vector<DecisionTree>& trees() const { return trees_; }
  std::size_t tree_count() const { return trees_.size(); }

 private:
  std::vector<DecisionTree> trees_;
};

/// Gini-split random forest. Labels are 0/1. Tree t is grown from the
/// generator seeded with derive_seed(options.seed, t).
RfModel rf_train(const Eigen::MatrixXd& X, std::span<const int> y, const RfOptions& options = {});

inline double rf_score(const RfModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& x) { return model.score(x); }

}  // namespace sba
