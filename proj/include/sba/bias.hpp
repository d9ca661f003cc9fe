#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sba/dataset.hpp"
#include "sba/experiment.hpp"
#include "sba/fairness.hpp"
#include "sba/stats.hpp"

namespace sba {

struct ScoredSample {
  std::string utterance_id;
  int label = 0;
  double score = 0.0;
  int prediction = 0;
};

/// Test-set scores of one split seed.
struct SeedScores {
  std::uint64_t seed = 0;
  std::vector<ScoredSample> samples;
};

std::vector<SeedScores> seed_scores(const AggregateResult& result);

/// Score CSV: utterance_id, label, score, prediction, seed.
void write_score_csv(const std::filesystem::path& path, const SeedScores& scores);
SeedScores read_score_csv(const std::filesystem::path& path);

/// Group values of a dimension, in the (A, B) order disparities use:
/// gender (M, F), age_group (1, 2), depression (non_depressed, depressed).
std::vector<std::string> group_values(Dimension d);
std::string group_value(const Subject& s, Dimension d);

inline const std::vector<Dimension> kAllDimensions{Dimension::age_group, Dimension::gender, Dimension::depression};

/// One subgroup aggregated over seeds. Se and Sp are means over the seeds
/// where they are defined; n_pos and n_neg sum test appearances.
struct SubgroupSummary {
  SubgroupReport report;
  std::vector<std::optional<double>> se_per_seed;
  std::vector<std::optional<double>> sp_per_seed;
  std::optional<TTestResult> delta_test;  // per-seed Sp - Se
  std::optional<double> auc;              // mean of per-seed AUCs
  std::optional<ScoreDistribution> distribution;  // scores pooled over seeds
};

struct BiasReport {
  std::vector<SubgroupSummary> subgroups;  // dimension order, then group order
  std::vector<DisparityReport> disparities;
  std::optional<ScoreDistribution> overall;
};

/// Subgroup metrics, disparities with per-seed paired t-tests, AUC and
/// score overlap. Samples are matched to subjects by utterance id; an
/// unknown utterance is a DataError. Undefined cells stay empty.
BiasReport bias_analysis(std::span<const SeedScores> seeds, const Cohort& cohort, std::span<const Dimension> dimensions,
                         std::size_t n_bins = kDefaultHistogramBins);

const SubgroupSummary& find_subgroup(const BiasReport& report, Dimension d, const std::string& value);
const DisparityReport& find_disparity(const BiasReport& report, Dimension d);

/// bias.csv: dimension, group, n_ci, n_nci, Se, Sp, delta, auc, overlap
void write_bias_csv(const std::filesystem::path& path, const BiasReport& report);
/// disparity.csv: dimension, groupA, groupB, delta_sens, delta_spec, p_sens, p_spec, significant
void write_disparity_csv(const std::filesystem::path& path, const BiasReport& report);
/// distribution.csv: dimension, group, bin, lower, upper, positive_mass, negative_mass
void write_distribution_csv(const std::filesystem::path& path, const BiasReport& report);
/// One wide row in rounded percent with `*` on p < 0.05, laid out like a
/// published subgroup table.
void write_bias_table_csv(const std::filesystem::path& path, const BiasReport& report, const std::string& label);

}  // namespace sba
