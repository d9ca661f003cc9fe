#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sba/bias.hpp"
#include "sba/config.hpp"
#include "sba/experiment.hpp"

namespace sba {

/// Process exit codes.
enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitData = 2, kExitNumeric = 3 };

struct RunOptions {
  std::filesystem::path config;
  std::optional<std::filesystem::path> out;
  std::optional<std::vector<std::uint64_t>> seeds;
  std::size_t jobs = 1;
};

/// Runs the configured experiment and writes its run directory:
/// run_manifest.json, metrics.csv, scores_seed<s>.csv and model_seed<s>.json.
AggregateResult cmd_run(const RunOptions& options);

void write_run_directory(const std::filesystem::path& out, const RunConfigFile& config, const AggregateResult& result);

struct BiasOptions {
  std::filesystem::path run;  // run directory or its run_manifest.json
  std::optional<std::filesystem::path> out;  // default <run>/bias
  std::optional<std::vector<Dimension>> dimensions;
};

/// bias.csv, disparity.csv, distribution.csv and bias_table.csv from a run's
/// persisted scores.
BiasReport cmd_bias_report(const BiasOptions& options);

struct SweepOptions {
  std::filesystem::path config;
  std::optional<std::filesystem::path> out;
  std::optional<std::string> layers;
  std::optional<std::vector<ClassifierKind>> classifiers;
  std::optional<std::vector<std::uint64_t>> seeds;
  std::size_t jobs = 1;
};

/// layer_sweep.csv and layer_sweep.json.
std::vector<LayerSweepRow> cmd_layer_sweep(const SweepOptions& options);

struct ExtractOptions {
  std::filesystem::path manifest;
  std::filesystem::path out;  // directory; mfcc40.csv is written inside
  std::size_t jobs = 1;
};

/// MFCC means for every manifest utterance. Every failure is logged; if any
/// occurred nothing is written and DataError lists them.
std::filesystem::path cmd_extract_features(const ExtractOptions& options);

/// Prints one line per check and returns the number of failures.
std::size_t cmd_table_check(const std::filesystem::path& fixtures, const std::optional<std::string>& table,
                            std::ostream& out);

void cmd_synth(const std::filesystem::path& spec, const std::filesystem::path& out);

}  // namespace sba
