#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <vector>

#include "json.hpp"
#include "sba/dataset.hpp"
#include "sba/embedding.hpp"
#include "sba/features.hpp"

namespace sba {

/// Subjects sharing gender, age group and depression status. CI members are
/// centred at +mean_shift/2 along the cohort direction, NCI members at
/// -mean_shift/2.
struct SyntheticCell {
  Gender gender = Gender::female;
  int age_group = 1;
  bool depressed = false;
  std::size_t n_ci = 0;
  std::size_t n_nci = 0;
  double mean_shift = 0.0;
};

struct SyntheticSpec {
  std::uint64_t seed = 1;
  std::size_t dim = 8;
  double sigma = 1.0;
  std::vector<SyntheticCell> cells;

  /// Optional embedding layers. A layer's class shift is the cell shift times
  /// its scale (default_layer_scale when unlisted).
  std::vector<LayerId> layers;
  std::map<LayerId, double> layer_scale;
  double default_layer_scale = 1.0;
  std::size_t frames_per_utterance = 4;
  double frame_noise = 0.1;

  /// Throws ConfigError on sigma <= 0, dim == 0, a bad age group or no cells.
  void validate() const;
  std::size_t subject_count() const;
};

/// Accepts either explicit `cells` or top-level `n_ci`, `n_nci`, `mean_shift`
/// applied to all eight gender x age group x depression cells. Unknown keys
/// are rejected.
SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j);

/// Phi(mean_shift / (sigma * sqrt(2))): the AUC of projecting onto the class
/// direction.
double analytic_auc(double mean_shift, double sigma);
/// Inverse of analytic_auc for a target in (0, 1).
double mean_shift_for_auc(double auc, double sigma);

struct SyntheticCohort {
  std::vector<SubjectRecord> records;
  std::vector<FeatureVector> features;  // tagged csv<dim>, records order
  std::vector<double> direction;        // unit vector shared by all cells
  std::vector<std::size_t> cell_of;     // cell index per record
};

SyntheticCohort gen_cohort(const SyntheticSpec& spec);

/// Pooled features of one embedding layer, tagged with the layer's id.
std::vector<FeatureVector> gen_layer_features(const SyntheticSpec& spec, const SyntheticCohort& cohort,
                                              const LayerId& layer);

/// Writes subjects.csv and features.csv; with layers, also emb/<utt>.<layer>.emb1
/// archives and emb/index.csv.
void write_synthetic_cohort(const SyntheticSpec& spec, const std::filesystem::path& out_dir);

/// 16 kHz samples A*sin(2*pi*f*k/16000), round(duration * 16000) of them.
/// Throws ConfigError for freq >= 8000, freq < 0, duration <= 0 or amplitude
/// outside [0, 1].
std::vector<double> tone_samples(double freq_hz, double duration_s, double amplitude);
void gen_tone_wav(const std::filesystem::path& path, double freq_hz, double duration_s, double amplitude);

}  // namespace sba
