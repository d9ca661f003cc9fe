#include "sba/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <set>
#include <thread>
#include <unordered_map>

#include "sba/error.hpp"
#include "sba/normalizer.hpp"
#include "sba/rng.hpp"
#include "sba/stats.hpp"

namespace sba {

std::string_view to_string(Task t) {
  switch (t) {
    case Task::ci_vs_nci: return "ci_vs_nci";
    case Task::dci_vs_ndci: return "dci_vs_ndci";
    case Task::cross_train_ci_test_d: return "cross_train_ci_test_d";
    case Task::cross_train_d_test_ci: return "cross_train_d_test_ci";
  }
  return "ci_vs_nci";
}

Task parse_task(std::string_view text) {
  for (Task t : {Task::ci_vs_nci, Task::dci_vs_ndci, Task::cross_train_ci_test_d, Task::cross_train_d_test_ci}) {
    if (text == to_string(t)) return t;
  }
  throw ConfigError("unknown task '" + std::string(text) + "'");
}

std::string_view to_string(ExperimentCondition c) {
  switch (c) {
    case ExperimentCondition::imb: return "IMB";
    case ExperimentCondition::cib: return "CIB";
    case ExperimentCondition::cigb: return "CIGB";
    case ExperimentCondition::train_bal_test_rem: return "train_bal_test_rem";
  }
  return "IMB";
}

ExperimentCondition parse_condition(std::string_view text) {
  for (auto c : {ExperimentCondition::imb, ExperimentCondition::cib, ExperimentCondition::cigb,
                 ExperimentCondition::train_bal_test_rem}) {
    if (text == to_string(c)) return c;
  }
  throw ConfigError("unknown condition '" + std::string(text) + "'");
}

LabelKind train_label(Task t) {
  return (t == Task::dci_vs_ndci || t == Task::cross_train_d_test_ci) ? LabelKind::depressed : LabelKind::ci;
}

LabelKind eval_label(Task t) {
  return (t == Task::dci_vs_ndci || t == Task::cross_train_ci_test_d) ? LabelKind::depressed : LabelKind::ci;
}

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw ConfigError("seed list is empty");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw ConfigError("seed list contains duplicates");
  }
  const bool cross = task == Task::cross_train_ci_test_d || task == Task::cross_train_d_test_ci;
  if (cross && condition != ExperimentCondition::cigb) {
    throw ConfigError("cross tasks run on the CIGB condition only");
  }
  if (svm_grid.C_values.empty() || svm_grid.gamma_values.empty()) throw ConfigError("SVM grid is empty");
  for (double v : svm_grid.C_values) {
    if (!(v > 0)) throw ConfigError("SVM C values must be positive");
  }
  for (double v : svm_grid.gamma_values) {
    if (!(v > 0)) throw ConfigError("SVM gamma values must be positive");
  }
  if (svm_folds < 2) throw ConfigError("SVM grid search needs at least 2 folds");
  if (mlp_epochs == 0) throw ConfigError("mlp_epochs must be positive");
  if (rf_trees == 0) throw ConfigError("rf_trees must be positive");
}

nlohmann::ordered_json to_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["task"] = to_string(c.task);
  j["condition"] = to_string(c.condition);
  j["feature"] = c.feature;
  j["classifier"] = to_string(c.classifier);
  j["seeds"] = c.seeds;
  j["balance_seed"] = c.balance_seed;
  j["classifier_seed"] = c.classifier_seed;
  j["svm_grid"] = {{"C", c.svm_grid.C_values}, {"gamma", c.svm_grid.gamma_values}};
  j["svm_folds"] = c.svm_folds;
  j["mlp_epochs"] = c.mlp_epochs;
  j["rf_trees"] = c.rf_trees;
  return j;
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  try {
    c.task = parse_task(j.at("task").get<std::string>());
    c.condition = parse_condition(j.at("condition").get<std::string>());
    c.feature = j.at("feature").get<std::string>();
    c.classifier = parse_classifier(j.at("classifier").get<std::string>());
    c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    c.balance_seed = j.at("balance_seed").get<std::uint64_t>();
    c.classifier_seed = j.at("classifier_seed").get<std::uint64_t>();
    c.svm_grid.C_values = j.at("svm_grid").at("C").get<std::vector<double>>();
    c.svm_grid.gamma_values = j.at("svm_grid").at("gamma").get<std::vector<double>>();
    c.svm_folds = j.at("svm_folds").get<int>();
    c.mlp_epochs = j.at("mlp_epochs").get<std::size_t>();
    c.rf_trees = j.at("rf_trees").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
  c.validate();
  return c;
}

FeatureTable::FeatureTable(std::span<const FeatureVector> vectors) {
  for (const auto& v : vectors) {
    validate(v);
    if (rows_.empty()) {
      feature_set_id_ = v.feature_set_id;
      dim_ = v.values.size();
    } else if (v.values.size() != dim_ || v.feature_set_id != feature_set_id_) {
      throw DataError("feature vector for '" + v.utterance_id + "' does not match the table's feature set");
    }
    if (!rows_.emplace(v.utterance_id, v.values).second) {
      throw DataError("duplicate features for utterance '" + v.utterance_id + "'");
    }
  }
}

Eigen::MatrixXd FeatureTable::matrix(std::span<const Subject* const> subjects) const {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(subjects.size()), static_cast<Eigen::Index>(dim_));
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    const auto& utt = subjects[i]->record.utterance_id;
    const auto it = rows_.find(utt);
    if (it == rows_.end()) throw DataError("missing features for utterance '" + utt + "'");
    for (std::size_t k = 0; k < dim_; ++k) {
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = it->second[k];
    }
  }
  return X;
}

namespace {

bool restricts_to_ci(Task t) { return t == Task::dci_vs_ndci; }

Cohort only_ci(const Cohort& c) {
  return c.filter([](const Subject& s) { return s.labels.ci; }, c.condition());
}

std::vector<int> labels_of(std::span<const Subject* const> subjects, LabelKind kind) {
  std::vector<int> y;
  y.reserve(subjects.size());
  for (const auto* s : subjects) y.push_back(label_of(*s, kind) ? 1 : 0);
  return y;
}

struct FittedScores {
  std::vector<double> scores;
  nlohmann::ordered_json summary;
};

FittedScores fit_and_score(const ExperimentConfig& cfg, const Eigen::MatrixXd& Xtr, std::span<const int> ytr,
                           const Eigen::MatrixXd& Xte, std::uint64_t split_seed) {
  FittedScores out;
  Eigen::VectorXd s;
  switch (cfg.classifier) {
    case ClassifierKind::svm: {
      std::vector<int> pm(ytr.size());
      std::transform(ytr.begin(), ytr.end(), pm.begin(), [](int v) { return v ? 1 : -1; });
      const auto grid = svm_grid_search(Xtr, pm, cfg.svm_grid, split_seed, cfg.svm_folds);
      s = grid.model.decision_function(Xte);
      nlohmann::ordered_json table = nlohmann::ordered_json::array();
      for (const auto& cell : grid.table) table.push_back({cell.C, cell.gamma, cell.cv_accuracy});
      out.summary = {{"classifier", "svm"},
                     {"C", grid.best_C},
                     {"gamma", grid.best_gamma},
                     {"cv_accuracy", grid.cv_accuracy},
                     {"support_vectors", grid.model.support_count()},
                     {"bias", grid.model.bias},
                     {"cv_fits_at_iteration_cap", grid.unconverged_cv_fits},
                     {"cv_table", table}};
      break;
    }
    case ClassifierKind::rf: {
      RfOptions opt;
      opt.seed = cfg.classifier_seed;
      opt.n_trees = cfg.rf_trees;
      const auto model = rf_train(Xtr, ytr, opt);
      s = model.scores(Xte);
      std::size_t depth = 0, leaves = 0;
      for (const auto& t : model.trees()) {
        depth = std::max(depth, t.depth());
        leaves += t.leaf_count();
      }
      out.summary = {{"classifier", "rf"},
                     {"trees", model.tree_count()},
                     {"seed", cfg.classifier_seed},
                     {"max_depth", depth},
                     {"total_leaves", leaves}};
      break;
    }
    case ClassifierKind::mlp: {
      MlpOptions opt;
      opt.seed = cfg.classifier_seed;
      opt.epochs = cfg.mlp_epochs;
      const auto fit = mlp_fit(Xtr, ytr, opt);
      s = fit.model.predict_proba(Xte);
      std::vector<std::size_t> sizes{static_cast<std::size_t>(Xtr.cols())};
      for (const auto& l : fit.model.layers()) sizes.push_back(static_cast<std::size_t>(l.weights.rows()));
      out.summary = {{"classifier", "mlp"},
                     {"layers", sizes},
                     {"epochs", opt.epochs},
                     {"learning_rate", opt.learning_rate},
                     {"seed", cfg.classifier_seed},
                     {"initial_loss", fit.loss_history.empty() ? 0.0 : fit.loss_history.front()},
                     {"final_loss", fit.model.loss(Xtr, ytr)}};
      break;
    }
  }
  out.scores.assign(s.data(), s.data() + s.size());
  return out;
}

std::vector<const Subject*> pick(const Cohort& cohort, const std::vector<std::string>& ids) {
  std::unordered_map<std::string, const Subject*> by_id;
  for (const auto& s : cohort.members()) by_id.emplace(s.record.subject_id, &s);
  std::vector<const Subject*> out;
  out.reserve(ids.size());
  for (const auto& id : ids) out.push_back(by_id.at(id));
  return out;
}

std::vector<const Subject*> all_of(const Cohort& cohort) {
  std::vector<const Subject*> out;
  out.reserve(cohort.size());
  for (const auto& s : cohort.members()) out.push_back(&s);
  return out;
}

SeedRun run_seed(const ExperimentConfig& cfg, const Cohort& full, const Cohort& base, const FeatureTable& features,
                 std::uint64_t seed) {
  SeedRun run;
  run.seed = seed;

  // Kept alive for the pointers below.
  Cohort balanced, remaining;
  std::vector<const Subject*> train, test;
  if (cfg.condition == ExperimentCondition::train_bal_test_rem) {
    balanced = balance_ci_gender(full, derive_seed(cfg.balance_seed, seed));
    remaining = remaining_after_balance(full, balanced);
    if (restricts_to_ci(cfg.task)) {
      balanced = only_ci(balanced);
      remaining = only_ci(remaining);
    }
    if (remaining.empty()) throw DataError("no subjects remain outside the balanced cohort");
    train = all_of(balanced);
    test = all_of(remaining);
  } else {
    const auto plan = stratified_split(base, train_label(cfg.task), seed);
    train = pick(base, plan.train_ids);
    test = pick(base, plan.test_ids);
  }

  for (const auto* s : train) run.train_subject_ids.push_back(s->record.subject_id);
  for (const auto* s : test) {
    run.test_subject_ids.push_back(s->record.subject_id);
    run.test_utterance_ids.push_back(s->record.utterance_id);
  }

  const Eigen::MatrixXd Xtr_raw = features.matrix(train);
  const Eigen::MatrixXd Xte_raw = features.matrix(test);
  const auto norm = Normalizer::fit(Xtr_raw);
  run.train_hash = matrix_hash(Xtr_raw);
  run.normalizer_hash = norm.fit_hash();
  if (run.train_hash != run.normalizer_hash) {
    throw NumericError("normalizer was not fitted on the training split");
  }
  const Eigen::MatrixXd Xtr = norm.apply(Xtr_raw);
  const Eigen::MatrixXd Xte = norm.apply(Xte_raw);

  const auto ytr = labels_of(train, train_label(cfg.task));
  run.test_labels = labels_of(test, eval_label(cfg.task));

  auto fitted = fit_and_score(cfg, Xtr, ytr, Xte, seed);
  for (double v : fitted.scores) {
    if (!std::isfinite(v)) throw NumericError("classifier produced a non-finite score");
  }
  run.model_summary = std::move(fitted.summary);
  run.model_summary["n_train"] = train.size();
  run.model_summary["n_test"] = test.size();
  run.scores = make_score_set(std::move(fitted.scores), cfg.classifier);
  run.counts = confusion(run.scores.predictions, run.test_labels);
  run.metrics = core_metrics(run.counts);
  return run;
}

}  // namespace

void aggregate(AggregateResult& result) {
  if (result.runs.empty()) throw DataError("no seed runs to aggregate");
  std::vector<double> acc, uar, se, sp;
  for (const auto& r : result.runs) {
    acc.push_back(r.metrics.accuracy);
    uar.push_back(r.metrics.uar);
    se.push_back(r.metrics.sensitivity);
    sp.push_back(r.metrics.specificity);
  }
  result.mean.accuracy = mean(acc);
  result.mean.sensitivity = mean(se);
  result.mean.specificity = mean(sp);
  result.mean.uar = (result.mean.sensitivity + result.mean.specificity) / 2.0;
  result.stddev.accuracy = population_stddev(acc);
  result.stddev.uar = population_stddev(uar);
  result.stddev.sensitivity = population_stddev(se);
  result.stddev.specificity = population_stddev(sp);
}

Cohort experiment_cohort(const ExperimentConfig& config, const Cohort& full) {
  Cohort base;
  switch (config.condition) {
    case ExperimentCondition::imb: base = full; break;
    case ExperimentCondition::cib: base = balance_ci(full, config.balance_seed); break;
    case ExperimentCondition::cigb: base = balance_ci_gender(full, config.balance_seed); break;
    case ExperimentCondition::train_bal_test_rem: return full;
  }
  return restricts_to_ci(config.task) ? only_ci(base) : base;
}

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::mutex m;
  std::size_t next = 0;
  std::vector<std::exception_ptr> errors(n);
  auto worker = [&] {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard lock(m);
        if (next >= n) return;
        i = next++;
      }
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(jobs, n); ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

AggregateResult run_experiment(const ExperimentConfig& config, const Cohort& full, const FeatureTable& features,
                               std::size_t jobs) {
  config.validate();
  AggregateResult result;
  result.config = config;
  const Cohort base = experiment_cohort(config, full);
  result.runs.resize(config.seeds.size());
  parallel_for(config.seeds.size(), jobs,
               [&](std::size_t i) { result.runs[i] = run_seed(config, full, base, features, config.seeds[i]); });
  aggregate(result);
  return result;
}

AggregateResult cross_task_eval(const ExperimentConfig& config, const Cohort& full, const FeatureTable& features,
                                std::size_t jobs) {
  if (config.task != Task::cross_train_ci_test_d && config.task != Task::cross_train_d_test_ci) {
    throw ConfigError("cross_task_eval needs a cross task");
  }
  return run_experiment(config, full, features, jobs);
}

std::vector<LayerSweepRow> layer_sweep(const ExperimentConfig& base, const Cohort& full,
                                       std::span<const LayerId> layers, std::span<const ClassifierKind> classifiers,
                                       const std::function<FeatureTable(const LayerId&)>& load, std::size_t jobs) {
  if (layers.empty()) throw ConfigError("layer sweep needs at least one layer");
  if (classifiers.empty()) throw ConfigError("layer sweep needs at least one classifier");
  std::vector<LayerSweepRow> rows;
  for (const auto& layer : layers) {
    validate(layer);
    const FeatureTable table = load(layer);
    for (auto kind : classifiers) {
      ExperimentConfig cfg = base;
      cfg.feature = layer.feature_set_id();
      cfg.classifier = kind;
      rows.push_back({layer, kind, run_experiment(cfg, full, table, jobs)});
    }
  }
  return rows;
}

nlohmann::ordered_json metrics_json(const MetricReport& m) {
  return {{"accuracy", m.accuracy}, {"uar", m.uar}, {"sensitivity", m.sensitivity}, {"specificity", m.specificity}};
}

nlohmann::ordered_json to_json(const AggregateResult& result) {
  nlohmann::ordered_json j;
  j["config"] = to_json(result.config);
  nlohmann::ordered_json seeds = nlohmann::ordered_json::array();
  for (const auto& r : result.runs) {
    seeds.push_back({{"seed", r.seed},
                     {"n_train", r.train_subject_ids.size()},
                     {"n_test", r.test_subject_ids.size()},
                     {"counts", {{"tp", r.counts.tp}, {"fn", r.counts.fn}, {"tn", r.counts.tn}, {"fp", r.counts.fp}}},
                     {"metrics", metrics_json(r.metrics)},
                     {"train_hash", r.train_hash},
                     {"normalizer_fit_hash", r.normalizer_hash}});
  }
  j["per_seed"] = std::move(seeds);
  j["mean"] = metrics_json(result.mean);
  j["std"] = metrics_json(result.stddev);
  return j;
}

}  // namespace sba
