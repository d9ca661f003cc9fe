#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sba/bias.hpp"
#include "sba/experiment.hpp"

namespace sba {

/// Environment variable that, when set, anchors relative data paths.
inline constexpr const char* kDataRootEnv = "SBA_DATA_ROOT";

/// A run configuration file. Relative input paths resolve against
/// $SBA_DATA_ROOT when set, otherwise against the config file's directory.
struct RunConfigFile {
  ExperimentConfig experiment;
  std::filesystem::path config_dir;
  std::filesystem::path manifest;                        // resolved
  std::optional<std::filesystem::path> features_csv;     // resolved
  std::optional<std::filesystem::path> embedding_index;  // resolved
  std::optional<std::filesystem::path> output_dir;       // resolved against the config directory
  std::vector<Dimension> bias_dimensions = kAllDimensions;
  std::size_t histogram_bins = kDefaultHistogramBins;
  std::vector<LayerId> layers;                // layer sweep; empty = every indexed layer
  std::vector<ClassifierKind> classifiers;    // layer sweep; empty = the configured classifier
  bool has_feature = false;

  /// Keys as written, minus output_dir, for the run manifest.
  nlohmann::ordered_json echo;
};

/// Anchors `relative` at $SBA_DATA_ROOT or else `fallback_dir`.
std::filesystem::path resolve_data_path(const std::string& path, const std::filesystem::path& fallback_dir);

/// Parses and validates; unknown keys and missing input files are errors.
RunConfigFile parse_run_config(const nlohmann::ordered_json& j, const std::filesystem::path& config_dir);
RunConfigFile load_run_config(const std::filesystem::path& path);

Cohort load_cohort(const RunConfigFile& config);

/// Features named by the experiment's feature id: `w2v2-<layer>` reads the
/// embedding index, anything else the feature CSV.
FeatureTable load_features(const RunConfigFile& config);
FeatureTable load_layer_table(const RunConfigFile& config, const LayerId& layer);

/// Input name -> {path, sha256}. Paths are written relative to `relative_to`.
nlohmann::ordered_json input_hashes(const RunConfigFile& config, const std::filesystem::path& relative_to);

/// `1-12`, `9,10`, `hidden-9,latent-2` and mixtures.
std::vector<LayerId> parse_layer_list(const std::string& text);
std::vector<std::uint64_t> parse_seed_list(const std::string& text);
std::vector<Dimension> parse_dimension_list(const std::string& text);
std::vector<ClassifierKind> parse_classifier_list(const std::string& text);

}  // namespace sba
