#include "sba/random_forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sba/error.hpp"
#include "sba/rng.hpp"

namespace sba {

DecisionTree::DecisionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw DataError("decision tree needs at least one node");
}

DecisionTree DecisionTree::constant(bool positive) {
  TreeNode leaf;
  leaf.positive_fraction = positive ? 1.0 : 0.0;
  return DecisionTree({leaf});
}

bool DecisionTree::vote(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  std::size_t k = 0;
  while (nodes_[k].feature >= 0) {
    const auto& n = nodes_[k];
    k = static_cast<std::size_t>(x[n.feature] <= n.threshold ? n.left : n.right);
  }
  return nodes_[k].positive_fraction > 0.5;
}

std::size_t DecisionTree::depth() const {
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
  std::size_t best = 0;
  while (!stack.empty()) {
    auto [k, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    if (nodes_[k].feature >= 0) {
      stack.push_back({static_cast<std::size_t>(nodes_[k].left), d + 1});
      stack.push_back({static_cast<std::size_t>(nodes_[k].right), d + 1});
    }
  }
  return best;
}

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.feature < 0; }));
}

RfModel::RfModel(std::vector<DecisionTree> trees) : trees_(std::move(trees)) {}

double RfModel::score(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  if (trees_.empty()) throw DataError("random forest has no trees");
  std::size_t votes = 0;
  for (const auto& t : trees_) votes += t.vote(x) ? 1 : 0;
  return static_cast<double>(votes) / static_cast<double>(trees_.size());
}

Eigen::VectorXd RfModel::scores(const Eigen::MatrixXd& X) const {
  Eigen::VectorXd s(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) s[i] = score(X.row(i));
  return s;
}

namespace {

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double impurity_decrease = -1.0;
};

double gini(double pos, double total) {
  if (total <= 0) return 0.0;
  const double p = pos / total;
  return 2.0 * p * (1.0 - p);
}

class TreeGrower {
 public:
  TreeGrower(const Eigen::MatrixXd& X, std::span<const int> y, const RfOptions& options, std::size_t max_features,
             std::uint64_t seed)
      : X_(X), y_(y), options_(options), max_features_(max_features), rng_(seed) {}

  DecisionTree grow(std::vector<std::size_t> samples) {
    struct Pending {
      std::size_t node;
      std::vector<std::size_t> samples;
    };
    std::vector<TreeNode> nodes(1);
    std::vector<Pending> stack;
    stack.push_back({0, std::move(samples)});
    while (!stack.empty()) {
      Pending item = std::move(stack.back());
      stack.pop_back();
      std::size_t pos = 0;
      for (auto s : item.samples) pos += static_cast<std::size_t>(y_[s]);
      const double n = static_cast<double>(item.samples.size());
      nodes[item.node].positive_fraction = static_cast<double>(pos) / n;
      if (item.samples.size() < options_.min_samples_split || pos == 0 || pos == item.samples.size()) continue;

      const Split split = best_split(item.samples, pos);
      if (split.feature < 0) continue;

      std::vector<std::size_t> left, right;
      for (auto s : item.samples) (X_(static_cast<Eigen::Index>(s), split.feature) <= split.threshold ? left : right).push_back(s);
      const auto l = static_cast<std::int32_t>(nodes.size());
      nodes.emplace_back();
      nodes.emplace_back();
      nodes[item.node].feature = split.feature;
      nodes[item.node].threshold = split.threshold;
      nodes[item.node].left = l;
      nodes[item.node].right = l + 1;
      stack.push_back({static_cast<std::size_t>(l + 1), std::move(right)});
      stack.push_back({static_cast<std::size_t>(l), std::move(left)});
    }
    return DecisionTree(std::move(nodes));
  }

 private:
  /// Visits features in random order until `max_features` non-constant ones
  /// were scanned and a valid split exists, or features run out.
  Split best_split(const std::vector<std::size_t>& samples, std::size_t pos_total) {
    const auto d = static_cast<std::size_t>(X_.cols());
    std::vector<std::size_t> features(d);
    std::iota(features.begin(), features.end(), 0);
    rng_.shuffle(std::span<std::size_t>(features));

    const double n = static_cast<double>(samples.size());
    const double parent = gini(static_cast<double>(pos_total), n) * n;
    Split best;
    std::size_t scanned = 0;
    std::vector<std::pair<double, int>> column(samples.size());
    for (std::size_t f : features) {
      if (scanned >= max_features_ && best.feature >= 0) break;
      for (std::size_t k = 0; k < samples.size(); ++k) {
        column[k] = {X_(static_cast<Eigen::Index>(samples[k]), static_cast<Eigen::Index>(f)), y_[samples[k]]};
      }
      std::sort(column.begin(), column.end());
      if (column.front().first == column.back().first) continue;
      ++scanned;
      double left_pos = 0.0;
      for (std::size_t k = 0; k + 1 < column.size(); ++k) {
        left_pos += column[k].second;
        if (column[k].first == column[k + 1].first) continue;
        const double nl = static_cast<double>(k + 1);
        const double nr = n - nl;
        const double right_pos = static_cast<double>(pos_total) - left_pos;
        const double decrease = parent - gini(left_pos, nl) * nl - gini(right_pos, nr) * nr;
        if (decrease > best.impurity_decrease) {
          double t = 0.5 * (column[k].first + column[k + 1].first);
          if (t >= column[k + 1].first) t = column[k].first;
          best = {static_cast<int>(f), t, decrease};
        }
      }
    }
    return best;
  }

  const Eigen::MatrixXd& X_;
  std::span<const int> y_;
  const RfOptions& options_;
  std::size_t max_features_;
  Rng rng_;
};

}  // namespace

RfModel rf_train(const Eigen::MatrixXd& X, std::span<const int> y, const RfOptions& options) {
  if (static_cast<Eigen::Index>(y.size()) != X.rows()) throw DataError("RF: label count does not match sample count");
  if (!X.allFinite()) throw DataError("RF features are not finite");
  if (options.n_trees == 0) throw ConfigError("RF needs at least one tree");
  bool pos = false, neg = false;
  for (int v : y) {
    if (v == 1) pos = true;
    else if (v == 0) neg = true;
    else throw DataError("RF labels must be 0 or 1");
  }
  if (!pos || !neg) throw DataError("RF training needs both classes");

  const auto d = static_cast<std::size_t>(X.cols());
  const std::size_t max_features =
      options.max_features > 0 ? std::min(options.max_features, d)
                               : std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(d)))));
  const auto n = static_cast<std::size_t>(X.rows());

  std::vector<DecisionTree> trees;
  trees.reserve(options.n_trees);
  for (std::size_t t = 0; t < options.n_trees; ++t) {
    const std::uint64_t tree_seed = derive_seed(options.seed, t);
    Rng bootstrap_rng(tree_seed);
    std::vector<std::size_t> samples(n);
    if (options.bootstrap) {
      for (auto& s : samples) s = bootstrap_rng.below(n);
    } else {
      std::iota(samples.begin(), samples.end(), 0);
    }
    TreeGrower grower(X, y, options, max_features, bootstrap_rng.next());
    trees.push_back(grower.grow(std::move(samples)));
  }
  return RfModel(std::move(trees));
}

}  // namespace sba
