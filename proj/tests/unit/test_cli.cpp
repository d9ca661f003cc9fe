#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <map>
#include <sstream>
#include <sys/wait.h>

#include "json.hpp"
#include "sba/bias.hpp"
#include "sba/commands.hpp"
#include "sba/config.hpp"
#include "sba/csv.hpp"
#include "sba/error.hpp"
#include "sba/synthetic.hpp"
#include "sba/tables.hpp"
#include "support.hpp"

using namespace sba;
namespace fs = std::filesystem;

namespace {

// A small synthetic cohort with a ready run configuration at dir/run.json.
void write_project(const testing::TempDir& dir, nlohmann::json overrides = nlohmann::json::object()) {
  const auto spec = synthetic_spec_from_json({{"seed", 3}, {"n_ci", 5}, {"n_nci", 5}, {"mean_shift", 2.0}});
  write_synthetic_cohort(spec, dir.path());
  nlohmann::json cfg{{"task", "ci_vs_nci"}, {"condition", "IMB"},     {"feature", "csv8"},
                     {"classifier", "rf"},  {"rf_trees", 20},         {"seeds", {0, 50}},
                     {"manifest", "subjects.csv"}, {"features_csv", "features.csv"}, {"output_dir", "out"}};
  cfg.update(overrides);
  testing::spit(dir / "run.json", cfg.dump(2));
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SBA_CLI_PATH) + " -q " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string quoted(const fs::path& p) { return "'" + p.string() + "'"; }

std::map<std::string, std::string> directory_bytes(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).generic_string()] = testing::slurp(e.path());
  }
  return out;
}

}  // namespace

TEST_SUITE("cli_reports") {
  TEST_CASE("run config: unknown keys, missing keys and bad names are config errors") {
    testing::TempDir dir;
    write_project(dir, {{"colour", "blue"}});
    CHECK_THROWS_WITH_AS(load_run_config(dir / "run.json"), doctest::Contains("colour"), ConfigError);
    write_project(dir, {{"classifier", "knn"}});
    CHECK_THROWS_AS(load_run_config(dir / "run.json"), ConfigError);
    write_project(dir, {{"manifest", "nowhere.csv"}});
    CHECK_THROWS_AS(load_run_config(dir / "run.json"), ConfigError);
    testing::spit(dir / "partial.json", R"({"task": "ci_vs_nci", "condition": "IMB"})");
    CHECK_THROWS_AS(load_run_config(dir / "partial.json"), ConfigError);
    testing::spit(dir / "broken.json", "{not json");
    CHECK_THROWS_AS(load_run_config(dir / "broken.json"), ConfigError);
    write_project(dir, {{"feature", "w2v2-hidden-9"}});
    CHECK_THROWS_AS(load_run_config(dir / "run.json"), ConfigError);
  }

  TEST_CASE("run config: paths resolve against the config dir or SBA_DATA_ROOT") {
    testing::TempDir dir, root;
    write_project(dir);
    const auto rc = load_run_config(dir / "run.json");
    CHECK(rc.manifest == (dir / "subjects.csv").lexically_normal());
    CHECK(rc.output_dir == (dir / "out").lexically_normal());
    CHECK_FALSE(rc.echo.contains("output_dir"));

    fs::copy_file(dir / "subjects.csv", root / "subjects.csv");
    fs::copy_file(dir / "features.csv", root / "features.csv");
    ::setenv(kDataRootEnv, root.path().c_str(), 1);
    const auto moved = load_run_config(dir / "run.json");
    ::unsetenv(kDataRootEnv);
    CHECK(moved.manifest == (root / "subjects.csv").lexically_normal());
  }

  TEST_CASE("list flags") {
    CHECK(parse_layer_list("1-3").size() == 3);
    CHECK(parse_layer_list("hidden-9,latent-2")[1] == LayerId{LayerKind::latent, 2});
    CHECK(parse_seed_list("0, 50,100") == std::vector<std::uint64_t>{0, 50, 100});
    CHECK_THROWS_AS(parse_seed_list("a"), ConfigError);
    CHECK_THROWS_AS(parse_seed_list("1,,2"), ConfigError);
    CHECK(parse_dimension_list("gender,age").size() == 2);
    CHECK(parse_classifier_list("svm,mlp")[1] == ClassifierKind::mlp);
  }

  TEST_CASE("cmd_run writes a self-describing run directory") {
    testing::TempDir dir;
    write_project(dir);
    RunOptions o;
    o.config = dir / "run.json";
    const auto result = cmd_run(o);
    const auto out = dir / "out";
    for (const char* f : {"run_manifest.json", "metrics.csv", "scores_seed0.csv", "scores_seed50.csv",
                          "model_seed0.json", "model_seed50.json"}) {
      CHECK(fs::exists(out / f));
    }
    const auto m = nlohmann::json::parse(testing::slurp(out / "run_manifest.json"));
    CHECK(m.at("format") == "sba-run-1");
    CHECK(m.at("inputs").at("manifest").at("path") == "../subjects.csv");
    CHECK(m.at("inputs").at("manifest").at("sha256").get<std::string>().size() == 64);
    CHECK(m.at("per_seed").size() == 2);
    CHECK(m.at("per_seed")[1].at("scores") == "scores_seed50.csv");
    CHECK(m.at("mean").at("uar").get<double>() == result.mean.uar);

    const auto scores = read_score_csv(out / "scores_seed50.csv");
    CHECK(scores.seed == 50);
    CHECK(scores.samples.size() == result.runs[1].test_utterance_ids.size());
    for (const auto& s : scores.samples) CHECK(s.prediction == (s.score >= 0.5 ? 1 : 0));
  }

  TEST_CASE("cmd_run is byte-for-byte repeatable and --seeds overrides the config") {
    testing::TempDir dir;
    write_project(dir);
    RunOptions o;
    o.config = dir / "run.json";
    o.out = dir / "a";
    cmd_run(o);
    o.out = dir / "b";
    o.jobs = 2;
    cmd_run(o);
    CHECK(directory_bytes(dir / "a") == directory_bytes(dir / "b"));

    o.out = dir / "c";
    o.seeds = std::vector<std::uint64_t>{7};
    cmd_run(o);
    CHECK(fs::exists(dir / "c" / "scores_seed7.csv"));
    CHECK_FALSE(fs::exists(dir / "c" / "scores_seed0.csv"));
  }

  TEST_CASE("bias report from a run directory") {
    testing::TempDir dir;
    write_project(dir);
    RunOptions o;
    o.config = dir / "run.json";
    cmd_run(o);
    BiasOptions b;
    b.run = dir / "out";
    const auto report = cmd_bias_report(b);
    CHECK(report.subgroups.size() == 6);
    CHECK(report.disparities.size() == 3);
    for (const char* f : {"bias.csv", "disparity.csv", "distribution.csv", "bias_table.csv"}) {
      CHECK(fs::exists(dir / "out" / "bias" / f));
    }
    const auto first = testing::slurp(dir / "out" / "bias" / "bias.csv");
    cmd_bias_report(b);
    CHECK(testing::slurp(dir / "out" / "bias" / "bias.csv") == first);

    b.dimensions = std::vector<Dimension>{Dimension::gender};
    b.out = dir / "gender_only";
    CHECK(cmd_bias_report(b).subgroups.size() == 2);

    fs::remove(dir / "out" / "scores_seed50.csv");
    b.out.reset();
    CHECK_THROWS_WITH_AS(cmd_bias_report(b), doctest::Contains("lacks persisted scores"), DataError);
  }

  TEST_CASE("bias analysis: an empty depressed-NCI cell stays undefined") {
    auto spec = synthetic_spec_from_json({{"seed", 4}, {"n_ci", 6}, {"n_nci", 6}, {"mean_shift", 1.0}});
    for (auto& c : spec.cells) {
      if (c.depressed) c.n_nci = 0;
    }
    const auto synth = gen_cohort(spec);
    const auto cohort = Cohort::from_records(synth.records);
    ExperimentConfig cfg;
    cfg.feature = "csv8";
    cfg.classifier = ClassifierKind::rf;
    cfg.rf_trees = 20;
    const auto result = run_experiment(cfg, cohort, FeatureTable(synth.features));
    const auto seeds = seed_scores(result);
    const auto report = bias_analysis(seeds, cohort, kAllDimensions);
    const auto& dep = find_subgroup(report, Dimension::depression, "depressed");
    CHECK_FALSE(dep.report.specificity.has_value());
    CHECK(dep.report.sensitivity.has_value());
    CHECK(dep.report.n_neg == 0);
    const auto& d = find_disparity(report, Dimension::depression);
    CHECK_FALSE(d.delta_spec.has_value());
    CHECK(d.delta_sens.has_value());

    testing::TempDir dir;
    write_bias_csv(dir / "bias.csv", report);
    CHECK(testing::slurp(dir / "bias.csv").find("undefined") != std::string::npos);

    // Subgroup means are over seeds; delta is their exact difference.
    const auto& m = find_subgroup(report, Dimension::gender, "M");
    double se = 0.0;
    for (const auto& v : m.se_per_seed) se += *v;
    CHECK(*m.report.sensitivity == doctest::Approx(se / 5.0).epsilon(1e-15));
    CHECK(*m.report.delta == *m.report.specificity - *m.report.sensitivity);
    CHECK(m.auc.has_value());
  }

  TEST_CASE("bias analysis rejects scores for unknown utterances") {
    const auto synth = gen_cohort(synthetic_spec_from_json({{"n_ci", 2}, {"n_nci", 2}}));
    const auto cohort = Cohort::from_records(synth.records);
    SeedScores s{0, {{"nobody", 1, 0.7, 1}}};
    CHECK_THROWS_AS(bias_analysis(std::vector<SeedScores>{s}, cohort, kAllDimensions), DataError);
  }

  TEST_CASE("score CSV round trip is exact") {
    testing::TempDir dir;
    SeedScores s{150, {{"a", 1, 0.1 + 0.2, 1}, {"b,\"c\"", 0, -1e-300, 0}}};
    write_score_csv(dir / "s.csv", s);
    const auto back = read_score_csv(dir / "s.csv");
    CHECK(back.seed == 150);
    REQUIRE(back.samples.size() == 2);
    CHECK(back.samples[0].score == 0.1 + 0.2);
    CHECK(back.samples[1].utterance_id == "b,\"c\"");
    CHECK(back.samples[1].score == -1e-300);
  }

  TEST_CASE("CSV quoting and number formatting") {
    const auto t = csv::parse("a,b\n\"x,\"\"y\"\"\",2\n");
    CHECK(t.rows[0][0] == "x,\"y\"");
    CHECK(csv::escape("plain") == "plain");
    CHECK(csv::escape("a,b") == "\"a,b\"");
    for (double v : {0.1, 1.0 / 3.0, 1e-310, -2.5e17}) CHECK(csv::parse_double(csv::format_double(v), "t") == v);
    CHECK_THROWS_AS(csv::parse_double("1.5x", "t"), DataError);
  }

  TEST_CASE("extract-features over three tones, and a missing file") {
    testing::TempDir dir;
    std::vector<SubjectRecord> rs;
    for (int i = 0; i < 3; ++i) {
      SubjectRecord r;
      r.subject_id = "S" + std::to_string(i);
      r.utterance_id = "U" + std::to_string(i);
      r.age = 70;
      r.mmse = 20 + i * 4;
      r.wav_path = "tone" + std::to_string(i) + ".wav";
      gen_tone_wav(dir / r.wav_path, 220.0 * (i + 1), 0.5, 0.5);
      rs.push_back(r);
    }
    write_manifest(dir / "m.csv", rs);
    const auto path = cmd_extract_features({dir / "m.csv", dir / "f1", 2});
    const auto rows = ingest_feature_csv(path, 40);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].feature_set_id == "mfcc40");
    CHECK(rows[2].utterance_id == "U2");
    cmd_extract_features({dir / "m.csv", dir / "f2", 1});
    CHECK(testing::slurp(dir / "f1" / "mfcc40.csv") == testing::slurp(dir / "f2" / "mfcc40.csv"));

    rs[1].wav_path = "gone.wav";
    write_manifest(dir / "m2.csv", rs);
    CHECK_THROWS_WITH_AS(cmd_extract_features({dir / "m2.csv", dir / "f3", 1}), doctest::Contains("gone.wav"),
                         DataError);
    CHECK_FALSE(fs::exists(dir / "f3" / "mfcc40.csv"));
    CHECK(run_cli("extract-features --manifest " + quoted(dir / "m2.csv") + " --out " + quoted(dir / "f3")) == 2);
    CHECK(run_cli("extract-features --manifest " + quoted(dir / "m.csv") + " --out " + quoted(dir / "f4")) == 0);
  }

  TEST_CASE("CLI exit codes") {
    testing::TempDir dir;
    write_project(dir);
    CHECK(run_cli("run --config " + quoted(dir / "run.json")) == 0);
    CHECK(run_cli("bias-report --run " + quoted(dir / "out")) == 0);
    CHECK(run_cli("bias-report --run " + quoted(dir / "nowhere")) == 2);
    write_project(dir, {{"classifier", "knn"}});
    CHECK(run_cli("run --config " + quoted(dir / "run.json")) == 1);
    CHECK(run_cli("run --config " + quoted(dir / "missing.json")) == 1);
    CHECK(run_cli("no-such-command") == 1);
    CHECK(run_cli("tone --freq 9000 --out " + quoted(dir / "t.wav")) == 1);
    CHECK(run_cli("tone --freq 440 --out " + quoted(dir / "t.wav")) == 0);
    CHECK(run_cli("table-check --table ci_detection_results --fixtures " + quoted(fs::path(SBA_FIXTURE_DIR))) == 0);
    CHECK(run_cli("table-check --table no_such_table") == 1);
  }

  TEST_CASE("table check: shipped detection fixture passes every UAR identity") {
    std::ostringstream out;
    CHECK(cmd_table_check(SBA_FIXTURE_DIR, std::string("ci_detection_results"), out) == 0);
    CHECK(out.str().find("FAIL") == std::string::npos);
    std::ostringstream bias;
    CHECK(cmd_table_check(SBA_FIXTURE_DIR, std::string("bias_hl9_svm"), bias) == 0);
  }

  TEST_CASE("table check arithmetic") {
    ResultRow row;
    row.sensitivity = 83.33;
    row.specificity = 77.78;
    row.uar = 80.56;
    CHECK(check_result_rows("t", {row})[0].pass);
    row.uar = 81.56;
    CHECK_FALSE(check_result_rows("t", {row})[0].pass);

    BiasCell male{"IMB", "gender", "M", 86, 76, 10, true, 2};
    BiasCell female{"IMB", "gender", "F", 68, 70, -2, false, 3};
    BiasDisparityRow gender{"IMB", "gender", "M", "F", 18, 6, true, false, 2};
    auto checks = check_bias_table("t", {male, female}, {gender});
    CHECK(std::all_of(checks.begin(), checks.end(), [](const CheckOutcome& c) { return c.pass; }));
    male.delta = 11;
    checks = check_bias_table("t", {male, female}, {gender});
    CHECK_FALSE(std::all_of(checks.begin(), checks.end(), [](const CheckOutcome& c) { return c.pass; }));
  }
}
