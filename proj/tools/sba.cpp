#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <string>

#include "sba/commands.hpp"
#include "sba/error.hpp"
#include "sba/synthetic.hpp"

#ifndef SBA_FIXTURE_DIR
#define SBA_FIXTURE_DIR "data/fixtures"
#endif

namespace {

template <class T>
std::optional<T> given(const CLI::Option* opt, const T& value) {
  return opt->count() > 0 ? std::optional<T>(value) : std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_st("sba"));

  CLI::App app{"Subgroup bias auditing for speech-based cognitive impairment classifiers"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Only log warnings and errors");

  std::string config, out, seeds, layers, dimensions, classifiers, manifest, run_dir, table, spec;
  std::string fixtures = SBA_FIXTURE_DIR;
  std::size_t jobs = 1;
  double freq = 440.0, duration = 1.0, amplitude = 0.5;

  auto* run = app.add_subcommand("run", "Run one experiment configuration");
  run->add_option("--config", config, "Run configuration (JSON)")->required();
  auto* run_out = run->add_option("--out", out, "Run directory (overrides output_dir)");
  auto* run_seeds = run->add_option("--seeds", seeds, "Comma-separated split seeds");
  run->add_option("--jobs", jobs, "Seeds trained concurrently")->check(CLI::PositiveNumber);

  auto* bias = app.add_subcommand("bias-report", "Subgroup bias report from a run directory");
  bias->add_option("--run", run_dir, "Run directory or run_manifest.json")->required();
  auto* bias_out = bias->add_option("--out", out, "Report directory (default <run>/bias)");
  auto* bias_dims = bias->add_option("--dimensions", dimensions, "Comma-separated: gender,age_group,depression");

  auto* sweep = app.add_subcommand("layer-sweep", "Evaluate every embedding layer");
  sweep->add_option("--config", config, "Run configuration (JSON)")->required();
  auto* sweep_out = sweep->add_option("--out", out, "Output directory");
  auto* sweep_layers = sweep->add_option("--layers", layers, "Layers, e.g. 1-12 or hidden-9,latent-2");
  auto* sweep_clf = sweep->add_option("--classifiers", classifiers, "Comma-separated: svm,rf,mlp");
  auto* sweep_seeds = sweep->add_option("--seeds", seeds, "Comma-separated split seeds");
  sweep->add_option("--jobs", jobs, "Seeds trained concurrently")->check(CLI::PositiveNumber);

  auto* extract = app.add_subcommand("extract-features", "Mean MFCC features for every manifest utterance");
  extract->add_option("--manifest", manifest, "Subject manifest CSV")->required();
  extract->add_option("--out", out, "Output directory")->required();
  extract->add_option("--jobs", jobs, "Files processed concurrently")->check(CLI::PositiveNumber);

  auto* check = app.add_subcommand("table-check", "Consistency checks over the transcribed result tables");
  check->add_option("--fixtures", fixtures, "Fixture directory");
  auto* check_table = check->add_option("--table", table, "Only this fixture, e.g. ci_detection_results");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic cohort");
  synth->add_option("--spec", spec, "Synthetic spec (JSON)")->required();
  synth->add_option("--out", out, "Output directory")->required();

  auto* tone = app.add_subcommand("tone", "Write a 16 kHz PCM sine tone");
  tone->add_option("--freq", freq, "Frequency in Hz");
  tone->add_option("--duration", duration, "Duration in seconds");
  tone->add_option("--amplitude", amplitude, "Peak amplitude in [0, 1]");
  tone->add_option("--out", out, "WAV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? sba::kExitOk : sba::kExitConfig;
  }
  spdlog::set_level(quiet ? spdlog::level::warn : spdlog::level::info);

  try {
    if (run->parsed()) {
      sba::RunOptions o;
      o.config = config;
      o.out = given(run_out, std::filesystem::path(out));
      if (run_seeds->count()) o.seeds = sba::parse_seed_list(seeds);
      o.jobs = jobs;
      sba::cmd_run(o);
    } else if (bias->parsed()) {
      sba::BiasOptions o;
      o.run = run_dir;
      o.out = given(bias_out, std::filesystem::path(out));
      if (bias_dims->count()) o.dimensions = sba::parse_dimension_list(dimensions);
      const auto report = sba::cmd_bias_report(o);
      for (const auto& d : report.disparities) {
        if (d.significant()) {
          std::cout << "significant disparity: " << sba::to_string(d.a.dimension) << " " << d.a.value << " vs "
                    << d.b.value << "\n";
        }
      }
    } else if (sweep->parsed()) {
      sba::SweepOptions o;
      o.config = config;
      o.out = given(sweep_out, std::filesystem::path(out));
      o.layers = given(sweep_layers, layers);
      if (sweep_clf->count()) o.classifiers = sba::parse_classifier_list(classifiers);
      if (sweep_seeds->count()) o.seeds = sba::parse_seed_list(seeds);
      o.jobs = jobs;
      sba::cmd_layer_sweep(o);
    } else if (extract->parsed()) {
      const auto path = sba::cmd_extract_features({manifest, out, jobs});
      std::cout << path.string() << "\n";
    } else if (check->parsed()) {
      const auto failures = sba::cmd_table_check(fixtures, given(check_table, table), std::cout);
      if (failures > 0) return sba::kExitData;
    } else if (synth->parsed()) {
      sba::cmd_synth(spec, out);
    } else if (tone->parsed()) {
      sba::gen_tone_wav(out, freq, duration, amplitude);
    }
  } catch (const sba::ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return sba::kExitConfig;
  } catch (const sba::DataError& e) {
    spdlog::error("data error: {}", e.what());
    return sba::kExitData;
  } catch (const sba::NumericError& e) {
    spdlog::error("numeric failure: {}", e.what());
    return sba::kExitNumeric;
  } catch (const std::exception& e) {
    spdlog::error("data error: {}", e.what());
    return sba::kExitData;
  }
  return sba::kExitOk;
}
