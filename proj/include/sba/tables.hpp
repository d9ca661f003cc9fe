#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace sba {

/// One transcribed result row, values in percent.
struct ResultRow {
  std::string setting;
  std::string condition;
  std::string feature;
  std::string classifier;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double uar = 0.0;
  double accuracy = 0.0;
  std::size_t line = 0;
};

/// Integer-percent subgroup cell.
struct BiasCell {
  std::string condition;
  std::string dimension;
  std::string group;
  int sp = 0;
  int se = 0;
  int delta = 0;
  bool delta_significant = false;
  std::size_t line = 0;
};

struct BiasDisparityRow {
  std::string condition;
  std::string dimension;
  std::string group_a;
  std::string group_b;
  int delta_sp = 0;
  int delta_se = 0;
  bool delta_sp_significant = false;
  bool delta_se_significant = false;
  std::size_t line = 0;
};

std::vector<ResultRow> read_result_rows(const std::filesystem::path& path);
std::vector<BiasCell> read_bias_cells(const std::filesystem::path& path);
std::vector<BiasDisparityRow> read_bias_disparities(const std::filesystem::path& path);

struct CheckOutcome {
  std::string table;  // fixture stem, e.g. ci_detection_results
  std::string item;   // human-readable row or cell
  double expected = 0.0;
  double computed = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// Result rows are percents; the tolerance is on the fraction scale.
inline constexpr double kUarTolerance = 0.005;

/// reported UAR vs (Se + Sp) / 2 per row.
std::vector<CheckOutcome> check_result_rows(const std::string& table, const std::vector<ResultRow>& rows,
                                            double tolerance = kUarTolerance);

/// delta == Sp - Se per cell and reported disparities == A - B exactly,
/// recomputed through the fairness module.
std::vector<CheckOutcome> check_bias_table(const std::string& table, const std::vector<BiasCell>& cells,
                                           const std::vector<BiasDisparityRow>& disparities);

/// Per-cell subject counts of a census under the three conditions.
struct CensusCell {
  bool ci = false;
  std::string gender;
  std::size_t imbalanced = 0;
  std::size_t ci_balanced = 0;
  std::size_t ci_gender_balanced = 0;
};
std::vector<CensusCell> read_census(const std::filesystem::path& path);

/// Builds a cohort with the imbalanced counts and runs the balancing
/// routines on it: per-class totals after CI balancing, per-cell counts after
/// CI-gender balancing, and the remainder per cell.
std::vector<CheckOutcome> check_census(const std::vector<CensusCell>& census, std::uint64_t seed = 0);

/// Every known fixture found in `dir`.
std::vector<CheckOutcome> table_check(const std::filesystem::path& dir);

/// Fixture stems belonging to each family.
inline const std::vector<std::string> kResultFixtures{"ci_detection_results", "depression_ci_results",
                                                      "cross_task_results"};
inline const std::vector<std::string> kBiasFixtures{"bias_hl9_svm", "bias_hl10_mlp"};

}  // namespace sba
