#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include "json.hpp"
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sba/dataset.hpp"
#include "sba/embedding.hpp"
#include "sba/features.hpp"
#include "sba/metrics.hpp"
#include "sba/mlp.hpp"
#include "sba/random_forest.hpp"
#include "sba/scores.hpp"
#include "sba/svm.hpp"

namespace sba {

enum class Task { ci_vs_nci, dci_vs_ndci, cross_train_ci_test_d, cross_train_d_test_ci };
enum class ExperimentCondition { imb, cib, cigb, train_bal_test_rem };

std::string_view to_string(Task t);
Task parse_task(std::string_view text);
std::string_view to_string(ExperimentCondition c);
ExperimentCondition parse_condition(std::string_view text);

/// Label used to stratify and fit, and the label predictions are scored against.
LabelKind train_label(Task t);
LabelKind eval_label(Task t);

inline const std::vector<std::uint64_t> kDefaultSeeds{0, 50, 100, 150, 200};

struct ExperimentConfig {
  Task task = Task::ci_vs_nci;
  ExperimentCondition condition = ExperimentCondition::imb;
  std::string feature = "mfcc40";
  ClassifierKind classifier = ClassifierKind::svm;
  std::vector<std::uint64_t> seeds = kDefaultSeeds;
  std::uint64_t balance_seed = 0;
  std::uint64_t classifier_seed = 42;
  SvmGrid svm_grid;
  int svm_folds = 5;
  std::size_t mlp_epochs = 1000;
  std::size_t rf_trees = 100;

  /// Throws ConfigError on an empty or duplicated seed list, or a cross task
  /// under anything but the CIGB condition.
  void validate() const;
};

nlohmann::ordered_json to_json(const ExperimentConfig& config);
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);

/// Pooled features keyed by utterance id.
class FeatureTable {
 public:
  FeatureTable() = default;
  /// Throws DataError on mixed dimensions, mixed tags or duplicate ids.
  explicit FeatureTable(std::span<const FeatureVector> vectors);

  const std::string& feature_set_id() const { return feature_set_id_; }
  std::size_t dimension() const { return dim_; }
  std::size_t size() const { return rows_.size(); }
  bool contains(const std::string& utterance_id) const { return rows_.count(utterance_id) != 0; }

  /// Rows in the given order. Throws DataError naming the first missing utterance.
  Eigen::MatrixXd matrix(std::span<const Subject* const> subjects) const;

 private:
  std::string feature_set_id_;
  std::size_t dim_ = 0;
  std::map<std::string, std::vector<double>> rows_;
};

/// Everything one split seed produced.
struct SeedRun {
  std::uint64_t seed = 0;
  std::vector<std::string> train_subject_ids;
  std::vector<std::string> test_subject_ids;
  std::vector<std::string> test_utterance_ids;
  std::vector<int> test_labels;  // evaluation label, 1 = positive
  ScoreSet scores;
  ConfusionCounts counts;
  MetricReport metrics;
  std::string train_hash;       // hash of the raw training matrix
  std::string normalizer_hash;  // hash the normalizer recorded when fitted
  nlohmann::ordered_json model_summary;
};

struct AggregateResult {
  ExperimentConfig config;
  std::vector<SeedRun> runs;  // config.seeds order
  MetricReport mean;          // uar is (mean se + mean sp) / 2
  MetricReport stddev;        // population std across seeds
};

/// Mean and population std of per-seed reports.
void aggregate(AggregateResult& result);

/// The cohort a task and condition evaluate on (before any train/test split).
/// For train_bal_test_rem this is the full cohort.
Cohort experiment_cohort(const ExperimentConfig& config, const Cohort& full);

/// Runs every seed, `jobs` of them at once. Results do not depend on `jobs`.
AggregateResult run_experiment(const ExperimentConfig& config, const Cohort& full, const FeatureTable& features,
                               std::size_t jobs = 1);

/// Same as run_experiment for a cross task; rejects direct tasks.
AggregateResult cross_task_eval(const ExperimentConfig& config, const Cohort& full, const FeatureTable& features,
                                std::size_t jobs = 1);

struct LayerSweepRow {
  LayerId layer;
  ClassifierKind classifier = ClassifierKind::svm;
  AggregateResult result;
};

/// One aggregate per (layer, classifier), layers outer. `load` supplies the
/// pooled features of a layer.
std::vector<LayerSweepRow> layer_sweep(const ExperimentConfig& base, const Cohort& full,
                                       std::span<const LayerId> layers, std::span<const ClassifierKind> classifiers,
                                       const std::function<FeatureTable(const LayerId&)>& load, std::size_t jobs = 1);

/// Runs fn(0..n-1) on up to `jobs` threads. If any call throws, the exception
/// of the lowest failing index is rethrown after all workers stop.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

nlohmann::ordered_json metrics_json(const MetricReport& m);
nlohmann::ordered_json to_json(const AggregateResult& result);

}  // namespace sba
