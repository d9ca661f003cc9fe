#include "sba/dataset.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <array>
#include <fstream>
#include <unordered_set>

#include "sba/csv.hpp"
#include "sba/error.hpp"
#include "sba/rng.hpp"

namespace sba {

std::string_view to_string(Gender g) { return g == Gender::female ? "F" : "M"; }

Gender parse_gender(std::string_view text) {
  if (text == "F" || text == "f" || text == "female") return Gender::female;
  if (text == "M" || text == "m" || text == "male") return Gender::male;
  throw DataError("unknown gender '" + std::string(text) + "' (expected F or M)");
}

std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::imbalanced: return "IMB";
    case Condition::ci_balanced: return "CIB";
    case Condition::ci_gender_balanced: return "CIGB";
    case Condition::custom: return "custom";
  }
  return "custom";
}

std::string_view to_string(LabelKind k) { return k == LabelKind::ci ? "ci" : "depressed"; }

void validate(const SubjectRecord& r) {
  const std::string who = "subject '" + r.subject_id + "'";
  if (r.subject_id.empty()) throw DataError("empty subject_id");
  if (r.utterance_id.empty()) throw DataError(who + ": empty utterance_id");
  if (r.age < 0) throw DataError(who + ": negative age");
  if (r.mmse < 0 || r.mmse > 30) throw DataError(who + ": MMSE outside [0, 30]");
  if (r.hamd < 0) throw DataError(who + ": negative HAM-D");
}

LabelSet derive_labels(const SubjectRecord& r) {
  if (r.mmse == kCiMmseCutoff) {
    spdlog::warn("subject '{}': MMSE exactly {} is unassigned by the cutoff rule; labelled NCI", r.subject_id,
                 kCiMmseCutoff);
  }
  return LabelSet{r.mmse < kCiMmseCutoff, r.hamd >= kDepressionCutoff, r.age <= kAgeGroupBoundary ? 1 : 2};
}

bool label_of(const Subject& s, LabelKind kind) { return kind == LabelKind::ci ? s.labels.ci : s.labels.depressed; }

Cohort::Cohort(std::vector<Subject> members, Condition condition)
    : members_(std::move(members)), condition_(condition) {
  std::unordered_set<std::string> subjects, utterances;
  for (const auto& s : members_) {
    if (!subjects.insert(s.record.subject_id).second) {
      throw DataError("duplicate subject_id '" + s.record.subject_id + "' in cohort");
    }
    if (!utterances.insert(s.record.utterance_id).second) {
      throw DataError("duplicate utterance_id '" + s.record.utterance_id + "' in cohort");
    }
  }
}

Cohort Cohort::from_records(const std::vector<SubjectRecord>& records, Condition condition) {
  std::vector<Subject> members;
  members.reserve(records.size());
  for (const auto& r : records) {
    validate(r);
    members.push_back({r, derive_labels(r)});
  }
  return Cohort(std::move(members), condition);
}

bool Cohort::contains(std::string_view subject_id) const { return find(subject_id) != nullptr; }

const Subject* Cohort::find(std::string_view subject_id) const {
  for (const auto& s : members_) {
    if (s.record.subject_id == subject_id) return &s;
  }
  return nullptr;
}

namespace {

/// Subsamples every group to `keep` members uniformly without replacement;
/// groups already at or below `keep` are kept whole.
Cohort subsample_groups(const Cohort& cohort, const std::vector<std::vector<std::size_t>>& groups,
                        std::size_t keep, std::uint64_t seed, Condition condition) {
  Rng rng(seed);
  std::vector<bool> selected(cohort.size(), false);
  for (const auto& group : groups) {
    if (group.size() <= keep) {
      for (std::size_t i : group) selected[i] = true;
      continue;
    }
    for (std::size_t pick : rng.sample_without_replacement(group.size(), keep)) selected[group[pick]] = true;
  }
  std::vector<Subject> kept;
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    if (selected[i]) kept.push_back(cohort.members()[i]);
  }
  return Cohort(std::move(kept), condition);
}

}  // namespace

Cohort balance_ci(const Cohort& cohort, std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> groups(2);  // [NCI, CI]
  for (std::size_t i = 0; i < cohort.size(); ++i) groups[cohort.members()[i].labels.ci ? 1 : 0].push_back(i);
  if (groups[0].empty() || groups[1].empty()) throw DataError("CI balancing needs both CI and NCI subjects");
  const std::size_t minority = std::min(groups[0].size(), groups[1].size());
  return subsample_groups(cohort, groups, minority, seed, Condition::ci_balanced);
}

Cohort balance_ci_gender(const Cohort& cohort, std::uint64_t seed) {
  // Cell order: CI-F, CI-M, NCI-F, NCI-M.
  std::vector<std::vector<std::size_t>> cells(4);
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    const auto& s = cohort.members()[i];
    const std::size_t cell = (s.labels.ci ? 0 : 2) + (s.record.gender == Gender::male ? 1 : 0);
    cells[cell].push_back(i);
  }
  static constexpr std::array<const char*, 4> kNames{"CI-F", "CI-M", "NCI-F", "NCI-M"};
  std::size_t m = cohort.size();
  for (std::size_t c = 0; c < 4; ++c) {
    if (cells[c].empty()) throw DataError(std::string("CI-gender balancing: cell ") + kNames[c] + " is empty");
    m = std::min(m, cells[c].size());
  }
  return subsample_groups(cohort, cells, m, seed, Condition::ci_gender_balanced);
}

Cohort remaining_after_balance(const Cohort& full, const Cohort& balanced) {
  std::unordered_set<std::string> taken;
  for (const auto& s : balanced.members()) {
    if (!full.contains(s.record.subject_id)) {
      throw DataError("balanced cohort contains subject '" + s.record.subject_id + "' not in the full cohort");
    }
    taken.insert(s.record.subject_id);
  }
  return full.filter([&](const Subject& s) { return !taken.contains(s.record.subject_id); }, Condition::custom);
}

SplitPlan stratified_split(const Cohort& cohort, LabelKind stratify_on, std::uint64_t seed) {
  std::array<std::vector<std::size_t>, 2> strata;
  for (std::size_t i = 0; i < cohort.size(); ++i) strata[label_of(cohort.members()[i], stratify_on) ? 1 : 0].push_back(i);

  Rng rng(seed);
  std::vector<bool> in_train(cohort.size(), false);
  for (std::size_t s = 0; s < 2; ++s) {
    auto& stratum = strata[s];
    if (stratum.size() < 2) {
      throw DataError("stratum " + std::string(to_string(stratify_on)) + "=" + (s ? "true" : "false") + " has " +
                      std::to_string(stratum.size()) + " member(s); a 70/30 split needs at least 2");
    }
    rng.shuffle(std::span<std::size_t>(stratum));
    const std::size_t n_train = stratum.size() * 7 / 10;
    for (std::size_t k = 0; k < n_train; ++k) in_train[stratum[k]] = true;
  }

  SplitPlan plan;
  plan.seed = seed;
  plan.stratify_on = stratify_on;
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    (in_train[i] ? plan.train_ids : plan.test_ids).push_back(cohort.members()[i].record.subject_id);
  }
  return plan;
}

std::vector<SubjectRecord> read_manifest(const std::filesystem::path& path) {
  const csv::Table t = csv::read(path);
  const std::size_t c_subject = t.column("subject_id"), c_utt = t.column("utterance_id"),
                    c_gender = t.column("gender"), c_age = t.column("age"), c_mmse = t.column("mmse"),
                    c_hamd = t.column("hamd"), c_wav = t.column("wav_path");
  std::vector<SubjectRecord> records;
  records.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string where = path.string() + " line " + std::to_string(t.line_numbers[r]);
    if (row.size() != t.header.size()) throw DataError(where + ": wrong number of columns");
    SubjectRecord rec;
    rec.subject_id = row[c_subject];
    rec.utterance_id = row[c_utt];
    try {
      rec.gender = parse_gender(row[c_gender]);
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    }
    rec.age = static_cast<int>(csv::parse_int(row[c_age], where + " age"));
    rec.mmse = static_cast<int>(csv::parse_int(row[c_mmse], where + " mmse"));
    rec.hamd = static_cast<int>(csv::parse_int(row[c_hamd], where + " hamd"));
    rec.wav_path = row[c_wav];
    try {
      validate(rec);
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    }
    records.push_back(std::move(rec));
  }
  return records;
}

void write_manifest(const std::filesystem::path& path, const std::vector<SubjectRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  csv::write_row(out, {"subject_id", "utterance_id", "gender", "age", "mmse", "hamd", "wav_path"});
  for (const auto& r : records) {
    csv::write_row(out, {r.subject_id, r.utterance_id, std::string(to_string(r.gender)), std::to_string(r.age),
                         std::to_string(r.mmse), std::to_string(r.hamd), r.wav_path});
  }
}

}  // namespace sba
