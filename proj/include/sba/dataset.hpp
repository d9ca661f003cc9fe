#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sba {

enum class Gender { female, male };

std::string_view to_string(Gender g);
Gender parse_gender(std::string_view text);

struct SubjectRecord {
  std::string subject_id;
  std::string utterance_id;
  Gender gender = Gender::female;
  int age = 0;
  int mmse = 30;
  int hamd = 0;
  std::string wav_path;
};

inline constexpr int kCiMmseCutoff = 24;      // mmse < 24 -> CI
inline constexpr int kDepressionCutoff = 8;   // hamd >= 8 -> depressed
inline constexpr int kAgeGroupBoundary = 65;  // age <= 65 -> group 1

struct LabelSet {
  bool ci = false;
  bool depressed = false;
  int age_group = 1;

  friend bool operator==(const LabelSet&, const LabelSet&) = default;
};

/// Throws DataError on out-of-range fields.
void validate(const SubjectRecord& record);

/// Pure and total over valid records. MMSE == 24 is labelled NCI and logged.
LabelSet derive_labels(const SubjectRecord& record);

struct Subject {
  SubjectRecord record;
  LabelSet labels;
};

enum class Condition { imbalanced, ci_balanced, ci_gender_balanced, custom };

std::string_view to_string(Condition c);

/// Immutable set of subjects with unique subject and utterance ids.
class Cohort {
 public:
  Cohort() = default;
  Cohort(std::vector<Subject> members, Condition condition);

  static Cohort from_records(const std::vector<SubjectRecord>& records, Condition condition = Condition::imbalanced);

  const std::vector<Subject>& members() const { return members_; }
  Condition condition() const { return condition_; }
  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  bool contains(std::string_view subject_id) const;
  const Subject* find(std::string_view subject_id) const;

  /// Members satisfying a predicate, with a new condition tag.
  template <class Pred>
  Cohort filter(Pred pred, Condition condition) const {
    std::vector<Subject> kept;
    for (const auto& s : members_) {
      if (pred(s)) kept.push_back(s);
    }
    return Cohort(std::move(kept), condition);
  }

 private:
  std::vector<Subject> members_;
  Condition condition_ = Condition::custom;
};

enum class LabelKind { ci, depressed };

std::string_view to_string(LabelKind k);
bool label_of(const Subject& s, LabelKind kind);

/// Majority class subsampled uniformly (without replacement) down to the
/// minority count; minority untouched; member order preserved.
Cohort balance_ci(const Cohort& cohort, std::uint64_t seed);

/// All four (CI x gender) cells subsampled to the smallest cell count.
Cohort balance_ci_gender(const Cohort& cohort, std::uint64_t seed);

/// Members of `full` absent from `balanced`. Throws DataError if `balanced`
/// holds a subject that `full` does not.
Cohort remaining_after_balance(const Cohort& full, const Cohort& balanced);

struct SplitPlan {
  std::vector<std::string> train_ids;  // subject ids, cohort order
  std::vector<std::string> test_ids;
  std::uint64_t seed = 0;
  LabelKind stratify_on = LabelKind::ci;
};

/// Per stratum, floor(0.7 * n) members go to train and the rest to test.
/// Each stratum needs at least two members.
SplitPlan stratified_split(const Cohort& cohort, LabelKind stratify_on, std::uint64_t seed);

/// Subject manifest CSV: subject_id, utterance_id, gender, age, mmse, hamd, wav_path.
std::vector<SubjectRecord> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<SubjectRecord>& records);

}  // namespace sba
