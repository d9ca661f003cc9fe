#include "sba/bias.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <unordered_map>

#include "sba/csv.hpp"
#include "sba/error.hpp"

namespace sba {

std::vector<SeedScores> seed_scores(const AggregateResult& result) {
  std::vector<SeedScores> out;
  for (const auto& run : result.runs) {
    SeedScores s;
    s.seed = run.seed;
    for (std::size_t i = 0; i < run.test_utterance_ids.size(); ++i) {
      s.samples.push_back({run.test_utterance_ids[i], run.test_labels[i], run.scores.scores[i],
                           run.scores.predictions[i]});
    }
    out.push_back(std::move(s));
  }
  return out;
}

void write_score_csv(const std::filesystem::path& path, const SeedScores& scores) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  csv::write_row(out, {"utterance_id", "label", "score", "prediction", "seed"});
  const std::string seed = std::to_string(scores.seed);
  for (const auto& s : scores.samples) {
    csv::write_row(out, {s.utterance_id, std::to_string(s.label), csv::format_double(s.score),
                         std::to_string(s.prediction), seed});
  }
}

SeedScores read_score_csv(const std::filesystem::path& path) {
  const auto t = csv::read(path);
  const auto c_utt = t.column("utterance_id"), c_label = t.column("label"), c_score = t.column("score"),
             c_pred = t.column("prediction"), c_seed = t.column("seed");
  SeedScores out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string where = path.filename().string() + " line " + std::to_string(t.line_numbers[r]);
    if (row.size() != t.header.size()) throw DataError(where + ": wrong number of fields");
    ScoredSample s;
    s.utterance_id = row[c_utt];
    s.label = static_cast<int>(csv::parse_int(row[c_label], where));
    s.score = csv::parse_double(row[c_score], where);
    s.prediction = static_cast<int>(csv::parse_int(row[c_pred], where));
    if ((s.label != 0 && s.label != 1) || (s.prediction != 0 && s.prediction != 1)) {
      throw DataError(where + ": label and prediction must be 0 or 1");
    }
    const auto seed = static_cast<std::uint64_t>(csv::parse_int(row[c_seed], where));
    if (r == 0) {
      out.seed = seed;
    } else if (seed != out.seed) {
      throw DataError(where + ": mixed seeds in one score file");
    }
    out.samples.push_back(std::move(s));
  }
  return out;
}

std::vector<std::string> group_values(Dimension d) {
  switch (d) {
    case Dimension::gender: return {"M", "F"};
    case Dimension::age_group: return {"1", "2"};
    case Dimension::depression: return {"non_depressed", "depressed"};
  }
  return {};
}

std::string group_value(const Subject& s, Dimension d) {
  switch (d) {
    case Dimension::gender: return std::string(to_string(s.record.gender));
    case Dimension::age_group: return std::to_string(s.labels.age_group);
    case Dimension::depression: return s.labels.depressed ? "depressed" : "non_depressed";
  }
  return {};
}

namespace {

std::optional<double> mean_defined(const std::vector<std::optional<double>>& v) {
  std::vector<double> xs;
  for (const auto& x : v) {
    if (x) xs.push_back(*x);
  }
  if (xs.empty()) return std::nullopt;
  return mean(xs);
}

/// Paired test over the seeds where both sides exist; none below two seeds.
std::optional<TTestResult> paired(const std::vector<std::optional<double>>& a,
                                  const std::vector<std::optional<double>>& b) {
  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] && b[i]) d.push_back(*a[i] - *b[i]);
  }
  if (d.size() < 2) return std::nullopt;
  return paired_ttest(d);
}

}  // namespace

BiasReport bias_analysis(std::span<const SeedScores> seeds, const Cohort& cohort, std::span<const Dimension> dimensions,
                         std::size_t n_bins) {
  if (seeds.empty()) throw DataError("bias analysis needs persisted scores for at least one seed");
  std::unordered_map<std::string, const Subject*> by_utt;
  for (const auto& s : cohort.members()) by_utt.emplace(s.record.utterance_id, &s);

  // Subject of every sample, resolved once.
  std::vector<std::vector<const Subject*>> who(seeds.size());
  for (std::size_t k = 0; k < seeds.size(); ++k) {
    for (const auto& sample : seeds[k].samples) {
      const auto it = by_utt.find(sample.utterance_id);
      if (it == by_utt.end()) {
        throw DataError("scored utterance '" + sample.utterance_id + "' is not in the subject manifest");
      }
      who[k].push_back(it->second);
    }
  }

  BiasReport report;
  {
    std::vector<double> pos, neg;
    for (const auto& s : seeds) {
      for (const auto& x : s.samples) (x.label ? pos : neg).push_back(x.score);
    }
    if (!pos.empty() && !neg.empty()) report.overall = score_distribution(pos, neg, n_bins);
  }

  for (Dimension dim : dimensions) {
    const auto values = group_values(dim);
    std::vector<std::size_t> idx;
    for (const auto& value : values) {
      SubgroupSummary g;
      std::size_t n_pos = 0, n_neg = 0;
      std::vector<double> aucs, pooled_pos, pooled_neg;
      for (std::size_t k = 0; k < seeds.size(); ++k) {
        const auto& samples = seeds[k].samples;
        std::vector<int> pred, lab;
        std::vector<double> pos, neg;
        for (std::size_t i = 0; i < samples.size(); ++i) {
          if (group_value(*who[k][i], dim) != value) continue;
          pred.push_back(samples[i].prediction);
          lab.push_back(samples[i].label);
          (samples[i].label ? pos : neg).push_back(samples[i].score);
        }
        std::optional<double> se, sp;
        if (!lab.empty()) {
          // Samples were already filtered to the group.
          auto mask = std::make_unique<bool[]>(lab.size());
          std::fill(mask.get(), mask.get() + lab.size(), true);
          const auto r = subgroup_metrics(pred, lab, std::span<const bool>(mask.get(), lab.size()),
                                          SubgroupKey{dim, value});
          se = r.sensitivity;
          sp = r.specificity;
        }
        g.se_per_seed.push_back(se);
        g.sp_per_seed.push_back(sp);
        n_pos += pos.size();
        n_neg += neg.size();
        if (!pos.empty() && !neg.empty()) aucs.push_back(auc(pos, neg));
        pooled_pos.insert(pooled_pos.end(), pos.begin(), pos.end());
        pooled_neg.insert(pooled_neg.end(), neg.begin(), neg.end());
      }
      g.report = make_subgroup_report(SubgroupKey{dim, value}, n_pos, n_neg, mean_defined(g.se_per_seed),
                                      mean_defined(g.sp_per_seed));
      g.delta_test = paired(g.sp_per_seed, g.se_per_seed);
      if (!aucs.empty()) g.auc = mean(aucs);
      if (!pooled_pos.empty() && !pooled_neg.empty()) {
        g.distribution = score_distribution(pooled_pos, pooled_neg, n_bins);
      }
      idx.push_back(report.subgroups.size());
      report.subgroups.push_back(std::move(g));
    }
    const auto& a = report.subgroups[idx[0]];
    const auto& b = report.subgroups[idx[1]];
    auto d = disparity_partial(a.report, b.report);
    d.test_sens = paired(a.se_per_seed, b.se_per_seed);
    d.test_spec = paired(a.sp_per_seed, b.sp_per_seed);
    report.disparities.push_back(std::move(d));
  }
  return report;
}

const SubgroupSummary& find_subgroup(const BiasReport& report, Dimension d, const std::string& value) {
  for (const auto& g : report.subgroups) {
    if (g.report.key.dimension == d && g.report.key.value == value) return g;
  }
  throw DataError("no subgroup " + std::string(to_string(d)) + "=" + value + " in the bias report");
}

const DisparityReport& find_disparity(const BiasReport& report, Dimension d) {
  for (const auto& x : report.disparities) {
    if (x.a.dimension == d) return x;
  }
  throw DataError("no disparity for " + std::string(to_string(d)) + " in the bias report");
}

namespace {

std::string cell(const std::optional<double>& v) { return v ? csv::format_double(*v) : "undefined"; }

std::string p_cell(const std::optional<TTestResult>& t) {
  if (!t) return "undefined";
  if (t->status == TTestStatus::degenerate) return "degenerate";
  return csv::format_double(t->p);
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::string percent(const std::optional<double>& v, const std::optional<TTestResult>& test) {
  if (!v) return "undefined";
  std::string s = std::to_string(static_cast<long long>(std::llround(*v * 100.0)));
  if (test && test->significant()) s += "*";
  return s;
}

}  // namespace

void write_bias_csv(const std::filesystem::path& path, const BiasReport& report) {
  auto out = open_out(path);
  csv::write_row(out, {"dimension", "group", "n_ci", "n_nci", "Se", "Sp", "delta", "auc", "overlap"});
  for (const auto& g : report.subgroups) {
    const auto& r = g.report;
    csv::write_row(out, {std::string(to_string(r.key.dimension)), r.key.value, std::to_string(r.n_pos),
                         std::to_string(r.n_neg), cell(r.sensitivity), cell(r.specificity), cell(r.delta), cell(g.auc),
                         g.distribution ? csv::format_double(g.distribution->overlap) : "undefined"});
  }
}

void write_disparity_csv(const std::filesystem::path& path, const BiasReport& report) {
  auto out = open_out(path);
  csv::write_row(out, {"dimension", "groupA", "groupB", "delta_sens", "delta_spec", "p_sens", "p_spec", "significant"});
  for (const auto& d : report.disparities) {
    csv::write_row(out, {std::string(to_string(d.a.dimension)), d.a.value, d.b.value, cell(d.delta_sens),
                         cell(d.delta_spec), p_cell(d.test_sens), p_cell(d.test_spec),
                         d.significant() ? "true" : "false"});
  }
}

void write_distribution_csv(const std::filesystem::path& path, const BiasReport& report) {
  auto out = open_out(path);
  csv::write_row(out, {"dimension", "group", "bin", "lower", "upper", "positive_mass", "negative_mass"});
  auto emit = [&](const std::string& dim, const std::string& group, const ScoreDistribution& d) {
    for (std::size_t i = 0; i < d.positive_mass.size(); ++i) {
      csv::write_row(out, {dim, group, std::to_string(i), csv::format_double(d.edges[i]),
                           csv::format_double(d.edges[i + 1]), csv::format_double(d.positive_mass[i]),
                           csv::format_double(d.negative_mass[i])});
    }
  };
  if (report.overall) emit("all", "all", *report.overall);
  for (const auto& g : report.subgroups) {
    if (g.distribution) emit(std::string(to_string(g.report.key.dimension)), g.report.key.value, *g.distribution);
  }
}

void write_bias_table_csv(const std::filesystem::path& path, const BiasReport& report, const std::string& label) {
  csv::Row header{"run"}, row{label};
  for (const auto& d : report.disparities) {
    const std::string dim(to_string(d.a.dimension));
    for (const auto* key : {&d.a, &d.b}) {
      const auto& g = find_subgroup(report, key->dimension, key->value);
      const std::string prefix = dim + "_" + key->value;
      header.insert(header.end(), {prefix + "_sp", prefix + "_se", prefix + "_delta"});
      row.insert(row.end(), {percent(g.report.specificity, std::nullopt), percent(g.report.sensitivity, std::nullopt),
                             percent(g.report.delta, g.delta_test)});
    }
    header.insert(header.end(), {dim + "_delta_sp", dim + "_delta_se"});
    row.insert(row.end(), {percent(d.delta_spec, d.test_spec), percent(d.delta_sens, d.test_sens)});
  }
  auto out = open_out(path);
  csv::write_row(out, header);
  csv::write_row(out, row);
}

}  // namespace sba
