#include "sba/commands.hpp"

#include <spdlog/spdlog.h>

#include <fstream>
#include <iomanip>
#include <ostream>

#include "sba/audio.hpp"
#include "sba/csv.hpp"
#include "sba/error.hpp"
#include "sba/hash.hpp"
#include "sba/mfcc.hpp"
#include "sba/synthetic.hpp"
#include "sba/tables.hpp"

namespace sba {

namespace fs = std::filesystem;

namespace {

constexpr const char* kRunManifest = "run_manifest.json";

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed for " + path.string());
}

nlohmann::ordered_json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + " is not valid JSON: " + e.what());
  }
}

std::string score_file(std::uint64_t seed) { return "scores_seed" + std::to_string(seed) + ".csv"; }
std::string model_file(std::uint64_t seed) { return "model_seed" + std::to_string(seed) + ".json"; }

fs::path output_dir(const std::optional<fs::path>& flag, const RunConfigFile& rc) {
  if (flag) return fs::absolute(*flag).lexically_normal();
  if (rc.output_dir) return *rc.output_dir;
  throw ConfigError("no output directory: pass --out or set output_dir");
}

void write_metrics_csv(const fs::path& path, const AggregateResult& result) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  csv::write_row(out, {"seed", "accuracy", "uar", "sensitivity", "specificity", "tp", "fn", "tn", "fp"});
  for (const auto& r : result.runs) {
    const auto& m = r.metrics;
    csv::write_row(out, {std::to_string(r.seed), csv::format_double(m.accuracy), csv::format_double(m.uar),
                         csv::format_double(m.sensitivity), csv::format_double(m.specificity),
                         std::to_string(r.counts.tp), std::to_string(r.counts.fn), std::to_string(r.counts.tn),
                         std::to_string(r.counts.fp)});
  }
  for (const auto& [name, m] : {std::pair{"mean", result.mean}, std::pair{"std", result.stddev}}) {
    csv::write_row(out, {name, csv::format_double(m.accuracy), csv::format_double(m.uar),
                         csv::format_double(m.sensitivity), csv::format_double(m.specificity), "", "", "", ""});
  }
}

}  // namespace

void write_run_directory(const fs::path& out, const RunConfigFile& config, const AggregateResult& result) {
  fs::create_directories(out);
  const auto scores = seed_scores(result);
  nlohmann::ordered_json manifest;
  manifest["format"] = "sba-run-1";
  manifest["config"] = config.echo;
  manifest["experiment"] = to_json(result.config);
  manifest["inputs"] = input_hashes(config, out);
  nlohmann::ordered_json dims = nlohmann::ordered_json::array();
  for (auto d : config.bias_dimensions) dims.push_back(to_string(d));
  manifest["bias"] = {{"dimensions", dims}, {"histogram_bins", config.histogram_bins}};

  auto agg = to_json(result);
  for (std::size_t i = 0; i < result.runs.size(); ++i) {
    const auto& run = result.runs[i];
    write_score_csv(out / score_file(run.seed), scores[i]);
    write_text(out / model_file(run.seed), run.model_summary.dump(2) + "\n");
    agg["per_seed"][i]["scores"] = score_file(run.seed);
    agg["per_seed"][i]["model_summary"] = model_file(run.seed);
  }
  manifest["per_seed"] = agg["per_seed"];
  manifest["mean"] = agg["mean"];
  manifest["std"] = agg["std"];
  write_metrics_csv(out / "metrics.csv", result);
  write_text(out / kRunManifest, manifest.dump(2) + "\n");
}

AggregateResult cmd_run(const RunOptions& options) {
  auto rc = load_run_config(options.config);
  if (options.seeds) {
    rc.experiment.seeds = *options.seeds;
    rc.echo["seeds"] = *options.seeds;
    rc.experiment.validate();
  }
  if (!rc.has_feature) throw ConfigError("configuration does not name a feature");
  const fs::path out = output_dir(options.out, rc);
  const auto cohort = load_cohort(rc);
  const auto features = load_features(rc);
  spdlog::info("run: {} subjects, feature {} ({} dims), {} seeds", cohort.size(), features.feature_set_id(),
               features.dimension(), rc.experiment.seeds.size());
  const auto result = run_experiment(rc.experiment, cohort, features, options.jobs);
  write_run_directory(out, rc, result);
  spdlog::info("run: mean UAR {:.4f} written to {}", result.mean.uar, out.string());
  return result;
}

BiasReport cmd_bias_report(const BiasOptions& options) {
  fs::path run_dir = options.run;
  fs::path manifest_path = run_dir / kRunManifest;
  if (fs::is_regular_file(options.run)) {
    manifest_path = options.run;
    run_dir = options.run.parent_path();
  }
  if (!fs::exists(manifest_path)) throw DataError("no run manifest at " + manifest_path.string());
  const auto m = read_json(manifest_path);

  std::vector<Dimension> dims;
  std::size_t bins = kDefaultHistogramBins;
  std::string label;
  std::vector<SeedScores> seeds;
  fs::path subjects;
  try {
    const auto& input = m.at("inputs").at("manifest");
    subjects = (run_dir / input.at("path").get<std::string>()).lexically_normal();
    if (!fs::exists(subjects)) throw DataError("subject manifest of the run is missing: " + subjects.string());
    if (sha256_file(subjects) != input.at("sha256").get<std::string>()) {
      throw DataError("subject manifest changed since the run: " + subjects.string());
    }
    for (const auto& d : m.at("bias").at("dimensions")) dims.push_back(parse_dimension(d.get<std::string>()));
    bins = m.at("bias").at("histogram_bins").get<std::size_t>();
    const auto& e = m.at("experiment");
    label = e.at("condition").get<std::string>() + " " + e.at("feature").get<std::string>() + " " +
            e.at("classifier").get<std::string>();
    for (const auto& s : m.at("per_seed")) {
      if (!s.contains("scores")) {
        throw DataError("run lacks persisted scores for seed " + std::to_string(s.at("seed").get<std::uint64_t>()));
      }
      const fs::path p = run_dir / s.at("scores").get<std::string>();
      if (!fs::exists(p)) throw DataError("run lacks persisted scores: " + p.string() + " is missing");
      seeds.push_back(read_score_csv(p));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed run manifest: " + std::string(e.what()));
  }
  if (seeds.empty()) throw DataError("run lacks persisted scores");
  if (options.dimensions) dims = *options.dimensions;

  const auto cohort = Cohort::from_records(read_manifest(subjects));
  const auto report = bias_analysis(seeds, cohort, dims, bins);
  const fs::path out = options.out ? *options.out : run_dir / "bias";
  fs::create_directories(out);
  write_bias_csv(out / "bias.csv", report);
  write_disparity_csv(out / "disparity.csv", report);
  write_distribution_csv(out / "distribution.csv", report);
  write_bias_table_csv(out / "bias_table.csv", report, label);
  return report;
}

std::vector<LayerSweepRow> cmd_layer_sweep(const SweepOptions& options) {
  auto rc = load_run_config(options.config);
  if (!rc.embedding_index) throw ConfigError("layer sweep needs embedding_index");
  if (options.seeds) {
    rc.experiment.seeds = *options.seeds;
    rc.experiment.validate();
  }
  std::vector<LayerId> layers = rc.layers;
  if (options.layers) layers = parse_layer_list(*options.layers);
  if (layers.empty()) layers = indexed_layers(read_embedding_index(*rc.embedding_index));
  std::vector<ClassifierKind> classifiers = rc.classifiers;
  if (options.classifiers) classifiers = *options.classifiers;
  if (classifiers.empty()) classifiers = {rc.experiment.classifier};
  const fs::path out = output_dir(options.out, rc);

  const auto cohort = load_cohort(rc);
  const auto rows = layer_sweep(
      rc.experiment, cohort, layers, classifiers, [&](const LayerId& l) { return load_layer_table(rc, l); },
      options.jobs);

  fs::create_directories(out);
  std::ofstream table(out / "layer_sweep.csv", std::ios::binary);
  if (!table) throw DataError("cannot write layer_sweep.csv");
  csv::write_row(table, {"layer", "classifier", "uar_mean", "uar_std", "accuracy_mean", "accuracy_std",
                         "sensitivity_mean", "specificity_mean"});
  nlohmann::ordered_json all = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    const auto& a = r.result;
    csv::write_row(table, {r.layer.name(), std::string(to_string(r.classifier)), csv::format_double(a.mean.uar),
                           csv::format_double(a.stddev.uar), csv::format_double(a.mean.accuracy),
                           csv::format_double(a.stddev.accuracy), csv::format_double(a.mean.sensitivity),
                           csv::format_double(a.mean.specificity)});
    all.push_back({{"layer", r.layer.name()}, {"classifier", to_string(r.classifier)}, {"result", to_json(a)}});
  }
  nlohmann::ordered_json doc;
  doc["format"] = "sba-layer-sweep-1";
  doc["config"] = rc.echo;
  doc["rows"] = std::move(all);
  write_text(out / "layer_sweep.json", doc.dump(2) + "\n");
  return rows;
}

fs::path cmd_extract_features(const ExtractOptions& options) {
  const auto records = read_manifest(options.manifest);
  const fs::path manifest_dir = fs::absolute(options.manifest).parent_path();
  std::vector<FeatureVector> vectors(records.size());
  std::vector<std::string> failures(records.size());
  const MfccConfig config;
  parallel_for(records.size(), options.jobs, [&](std::size_t i) {
    const auto& r = records[i];
    try {
      if (r.wav_path.empty()) throw DataError("no wav_path");
      const auto wav = resolve_data_path(r.wav_path, manifest_dir);
      vectors[i] = mean_pool(mfcc(load_wav(wav), config), "mfcc40", r.utterance_id);
    } catch (const std::exception& e) {
      failures[i] = r.utterance_id + ": " + e.what();
    }
  });
  std::string summary;
  std::size_t failed = 0;
  for (const auto& f : failures) {
    if (f.empty()) continue;
    spdlog::error("extract-features: {}", f);
    summary += "\n  " + f;
    ++failed;
  }
  if (failed > 0) {
    throw DataError(std::to_string(failed) + " of " + std::to_string(records.size()) +
                    " utterances failed:" + summary);
  }
  fs::create_directories(options.out);
  const fs::path path = options.out / "mfcc40.csv";
  write_feature_csv(path, MfccConfig{}.n_coeffs, vectors);
  return path;
}

std::size_t cmd_table_check(const fs::path& fixtures, const std::optional<std::string>& table, std::ostream& out) {
  const auto checks = table_check(fixtures);
  std::size_t failures = 0, shown = 0;
  for (const auto& c : checks) {
    if (table && c.table != *table) continue;
    ++shown;
    if (!c.pass) ++failures;
    // Fixture values are short decimals; six significant digits hides the
    // binary noise of dividing percents by 100.
    out << std::setprecision(6) << (c.pass ? "PASS " : "FAIL ") << c.table << ": " << c.item << " expected "
        << c.expected << " computed " << c.computed;
    if (c.tolerance > 0) out << " tol " << c.tolerance;
    out << "\n";
  }
  if (table && shown == 0) throw ConfigError("no fixture named '" + *table + "'");
  out << shown - failures << "/" << shown << " checks passed\n";
  return failures;
}

void cmd_synth(const fs::path& spec, const fs::path& out) {
  std::ifstream in(spec, std::ios::binary);
  if (!in) throw ConfigError("cannot open synthetic spec " + spec.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("synthetic spec is not valid JSON: " + std::string(e.what()));
  }
  write_synthetic_cohort(synthetic_spec_from_json(j), out);
}

}  // namespace sba
