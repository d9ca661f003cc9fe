#include "sba/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "sba/csv.hpp"
#include "sba/error.hpp"
#include "sba/hash.hpp"

namespace sba {

namespace fs = std::filesystem;

fs::path resolve_data_path(const std::string& path, const fs::path& fallback_dir) {
  if (path.empty()) throw ConfigError("empty path in configuration");
  fs::path p(path);
  if (p.is_absolute()) return p.lexically_normal();
  const char* root = std::getenv(kDataRootEnv);
  const fs::path base = (root != nullptr && *root != '\0') ? fs::path(root) : fallback_dir;
  return fs::absolute(base / p).lexically_normal();
}

namespace {

const std::set<std::string> kKnownKeys{
    "task",          "condition",       "feature",     "classifier",     "seeds",
    "balance_seed",  "classifier_seed", "svm_grid",    "svm_folds",      "mlp_epochs",
    "rf_trees",      "manifest",        "features_csv", "embedding_index", "output_dir",
    "bias_dimensions", "histogram_bins", "layers",     "classifiers"};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw ConfigError("empty item in list '" + text + "'");
    out.push_back(item.substr(b, e - b + 1));
  }
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

fs::path existing(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw ConfigError(what + " not found: " + p.string());
  return p;
}

}  // namespace

RunConfigFile parse_run_config(const nlohmann::ordered_json& j, const fs::path& config_dir) {
  if (!j.is_object()) throw ConfigError("run configuration must be a JSON object");
  for (const auto& item : j.items()) {
    if (!kKnownKeys.count(item.key())) throw ConfigError("unknown configuration key '" + item.key() + "'");
  }
  RunConfigFile rc;
  rc.config_dir = fs::absolute(config_dir).lexically_normal();
  auto& e = rc.experiment;
  try {
    for (const char* key : {"task", "condition", "classifier", "manifest"}) {
      if (!j.contains(key)) throw ConfigError(std::string("missing configuration key '") + key + "'");
    }
    e.task = parse_task(j.at("task").get<std::string>());
    e.condition = parse_condition(j.at("condition").get<std::string>());
    e.classifier = parse_classifier(j.at("classifier").get<std::string>());
    if (j.contains("feature")) {
      e.feature = j.at("feature").get<std::string>();
      rc.has_feature = !e.feature.empty();
    } else {
      e.feature.clear();
    }
    if (j.contains("seeds")) e.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("balance_seed")) e.balance_seed = j.at("balance_seed").get<std::uint64_t>();
    if (j.contains("classifier_seed")) e.classifier_seed = j.at("classifier_seed").get<std::uint64_t>();
    if (j.contains("svm_grid")) {
      const auto& g = j.at("svm_grid");
      for (const auto& item : g.items()) {
        if (item.key() != "C" && item.key() != "gamma") {
          throw ConfigError("unknown svm_grid key '" + item.key() + "'");
        }
      }
      if (g.contains("C")) e.svm_grid.C_values = g.at("C").get<std::vector<double>>();
      if (g.contains("gamma")) e.svm_grid.gamma_values = g.at("gamma").get<std::vector<double>>();
    }
    if (j.contains("svm_folds")) e.svm_folds = j.at("svm_folds").get<int>();
    if (j.contains("mlp_epochs")) e.mlp_epochs = j.at("mlp_epochs").get<std::size_t>();
    if (j.contains("rf_trees")) e.rf_trees = j.at("rf_trees").get<std::size_t>();

    rc.manifest = existing(resolve_data_path(j.at("manifest").get<std::string>(), rc.config_dir), "manifest");
    if (j.contains("features_csv")) {
      rc.features_csv =
          existing(resolve_data_path(j.at("features_csv").get<std::string>(), rc.config_dir), "features_csv");
    }
    if (j.contains("embedding_index")) {
      rc.embedding_index =
          existing(resolve_data_path(j.at("embedding_index").get<std::string>(), rc.config_dir), "embedding_index");
    }
    if (j.contains("output_dir")) {
      fs::path out(j.at("output_dir").get<std::string>());
      rc.output_dir = (out.is_absolute() ? out : rc.config_dir / out).lexically_normal();
    }
    if (j.contains("bias_dimensions")) {
      rc.bias_dimensions.clear();
      for (const auto& d : j.at("bias_dimensions")) rc.bias_dimensions.push_back(parse_dimension(d.get<std::string>()));
    }
    if (j.contains("histogram_bins")) rc.histogram_bins = j.at("histogram_bins").get<std::size_t>();
    if (j.contains("layers")) {
      for (const auto& l : j.at("layers")) rc.layers.push_back(parse_layer(l.get<std::string>()));
    }
    if (j.contains("classifiers")) {
      for (const auto& c : j.at("classifiers")) rc.classifiers.push_back(parse_classifier(c.get<std::string>()));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("run configuration: ") + ex.what());
  }
  if (rc.histogram_bins == 0) throw ConfigError("histogram_bins must be positive");

  const bool embedding = e.feature.starts_with("w2v2-");
  if (rc.has_feature && embedding && !rc.embedding_index) {
    throw ConfigError("feature '" + e.feature + "' needs embedding_index");
  }
  if (rc.has_feature && !embedding && !rc.features_csv) {
    throw ConfigError("feature '" + e.feature + "' needs features_csv");
  }
  if (rc.has_feature && embedding) parse_layer(e.feature.substr(5));
  e.validate();

  rc.echo = j;
  rc.echo.erase("output_dir");
  return rc;
}

RunConfigFile load_run_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open configuration " + path.string());
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError("configuration " + path.string() + " is not valid JSON: " + ex.what());
  }
  return parse_run_config(j, fs::absolute(path).parent_path());
}

Cohort load_cohort(const RunConfigFile& config) { return Cohort::from_records(read_manifest(config.manifest)); }

namespace {

std::size_t csv_dimension(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::string header;
  if (!in || !std::getline(in, header)) throw DataError("cannot read header of " + path.string());
  const auto t = csv::parse(header);
  if (t.header.size() < 2) throw DataError(path.string() + ": feature CSV needs at least one feature column");
  return t.header.size() - 1;
}

}  // namespace

FeatureTable load_layer_table(const RunConfigFile& config, const LayerId& layer) {
  if (!config.embedding_index) throw ConfigError("embedding features need embedding_index");
  const auto vectors = load_layer_features(*config.embedding_index, layer);
  return FeatureTable(vectors);
}

FeatureTable load_features(const RunConfigFile& config) {
  const auto& feature = config.experiment.feature;
  if (feature.empty()) throw ConfigError("configuration does not name a feature");
  if (feature.starts_with("w2v2-")) return load_layer_table(config, parse_layer(feature.substr(5)));
  if (!config.features_csv) throw ConfigError("feature '" + feature + "' needs features_csv");
  const auto declared = declared_dimension(feature);
  const std::size_t dim = declared ? *declared : csv_dimension(*config.features_csv);
  const auto vectors = ingest_feature_csv(*config.features_csv, dim, feature);
  return FeatureTable(vectors);
}

nlohmann::ordered_json input_hashes(const RunConfigFile& config, const fs::path& relative_to) {
  const fs::path base = fs::absolute(relative_to).lexically_normal();
  auto rel = [&](const fs::path& p) { return p.lexically_relative(base).generic_string(); };
  nlohmann::ordered_json j;
  j["manifest"] = {{"path", rel(config.manifest)}, {"sha256", sha256_file(config.manifest)}};
  const auto& feature = config.experiment.feature;
  if (feature.starts_with("w2v2-") && config.embedding_index) {
    const auto layer = parse_layer(feature.substr(5));
    std::string digests;
    for (const auto& entry : read_embedding_index(*config.embedding_index)) {
      if (entry.layer == layer) digests += entry.utterance_id + ":" + sha256_file(entry.path) + "\n";
    }
    j["embedding_index"] = {{"path", rel(*config.embedding_index)},
                            {"sha256", sha256_file(*config.embedding_index)},
                            {"layer", layer.name()},
                            {"archives_sha256", sha256_hex(digests)}};
  } else if (config.features_csv) {
    j["features_csv"] = {{"path", rel(*config.features_csv)}, {"sha256", sha256_file(*config.features_csv)}};
  }
  return j;
}

std::vector<LayerId> parse_layer_list(const std::string& text) {
  std::vector<LayerId> out;
  for (const auto& item : split_list(text)) {
    const auto dash = item.find('-');
    const bool numeric_range = dash != std::string::npos && dash > 0 &&
                               item.find_first_not_of("0123456789-") == std::string::npos;
    if (numeric_range) {
      const long long lo = csv::parse_int(item.substr(0, dash), "layer range");
      const long long hi = csv::parse_int(item.substr(dash + 1), "layer range");
      if (lo < 1 || hi < lo) throw ConfigError("bad layer range '" + item + "'");
      for (long long k = lo; k <= hi; ++k) {
        LayerId id{LayerKind::hidden, static_cast<std::uint32_t>(k)};
        validate(id);
        out.push_back(id);
      }
    } else {
      out.push_back(parse_layer(item));
    }
  }
  return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  for (const auto& item : split_list(text)) {
    long long v = 0;
    try {
      v = csv::parse_int(item, "seed list");
    } catch (const DataError&) {
      throw ConfigError("seed '" + item + "' is not an integer");
    }
    if (v < 0) throw ConfigError("seeds must be non-negative");
    out.push_back(static_cast<std::uint64_t>(v));
  }
  return out;
}

std::vector<Dimension> parse_dimension_list(const std::string& text) {
  std::vector<Dimension> out;
  for (const auto& item : split_list(text)) out.push_back(parse_dimension(item));
  return out;
}

std::vector<ClassifierKind> parse_classifier_list(const std::string& text) {
  std::vector<ClassifierKind> out;
  for (const auto& item : split_list(text)) out.push_back(parse_classifier(item));
  return out;
}

}  // namespace sba
