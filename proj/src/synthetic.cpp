#include "sba/synthetic.hpp"

#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <numbers>
#include <set>

#include "sba/audio.hpp"
#include "sba/error.hpp"
#include "sba/rng.hpp"
#include "sba/stats.hpp"

namespace sba {

void SyntheticSpec::validate() const {
  if (dim == 0) throw ConfigError("synthetic dim must be positive");
  if (!(sigma > 0) || !std::isfinite(sigma)) throw ConfigError("synthetic sigma must be positive");
  if (cells.empty()) throw ConfigError("synthetic spec has no cells");
  for (const auto& c : cells) {
    if (c.age_group != 1 && c.age_group != 2) throw ConfigError("synthetic age_group must be 1 or 2");
    if (!std::isfinite(c.mean_shift)) throw ConfigError("synthetic mean_shift must be finite");
  }
  if (subject_count() == 0) throw ConfigError("synthetic spec generates no subjects");
  for (const auto& l : layers) sba::validate(l);
  if (!(frame_noise >= 0)) throw ConfigError("frame_noise must be non-negative");
  if (!layers.empty() && frames_per_utterance == 0) throw ConfigError("frames_per_utterance must be positive");
}

std::size_t SyntheticSpec::subject_count() const {
  std::size_t n = 0;
  for (const auto& c : cells) n += c.n_ci + c.n_nci;
  return n;
}

namespace {

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) throw ConfigError(where + ": unknown key '" + item.key() + "'");
  }
}

}  // namespace

SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("synthetic spec must be a JSON object");
  reject_unknown(j,
                 {"seed", "dim", "sigma", "cells", "n_ci", "n_nci", "mean_shift", "layers", "layer_scale",
                  "default_layer_scale", "frames_per_utterance", "frame_noise"},
                 "synthetic spec");
  SyntheticSpec s;
  try {
    s.seed = j.value("seed", s.seed);
    s.dim = j.value("dim", s.dim);
    s.sigma = j.value("sigma", s.sigma);
    if (j.contains("cells")) {
      if (j.contains("n_ci") || j.contains("n_nci") || j.contains("mean_shift")) {
        throw ConfigError("synthetic spec: give either cells or n_ci/n_nci/mean_shift, not both");
      }
      for (const auto& c : j.at("cells")) {
        reject_unknown(c, {"gender", "age_group", "depressed", "n_ci", "n_nci", "mean_shift"}, "synthetic cell");
        SyntheticCell cell;
        cell.gender = parse_gender(c.at("gender").get<std::string>());
        cell.age_group = c.at("age_group").get<int>();
        cell.depressed = c.at("depressed").get<bool>();
        cell.n_ci = c.value("n_ci", std::size_t{0});
        cell.n_nci = c.value("n_nci", std::size_t{0});
        cell.mean_shift = c.value("mean_shift", 0.0);
        s.cells.push_back(cell);
      }
    } else {
      const auto n_ci = j.value("n_ci", std::size_t{0});
      const auto n_nci = j.value("n_nci", std::size_t{0});
      const double shift = j.value("mean_shift", 0.0);
      for (Gender g : {Gender::female, Gender::male}) {
        for (int age : {1, 2}) {
          for (bool dep : {false, true}) s.cells.push_back({g, age, dep, n_ci, n_nci, shift});
        }
      }
    }
    if (j.contains("layers")) {
      for (const auto& l : j.at("layers")) s.layers.push_back(parse_layer(l.get<std::string>()));
    }
    if (j.contains("layer_scale")) {
      for (const auto& item : j.at("layer_scale").items()) {
        s.layer_scale[parse_layer(item.key())] = item.value().get<double>();
      }
    }
    s.default_layer_scale = j.value("default_layer_scale", s.default_layer_scale);
    s.frames_per_utterance = j.value("frames_per_utterance", s.frames_per_utterance);
    s.frame_noise = j.value("frame_noise", s.frame_noise);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synthetic spec: ") + e.what());
  }
  s.validate();
  return s;
}

double analytic_auc(double mean_shift, double sigma) { return normal_cdf(mean_shift / (sigma * std::numbers::sqrt2)); }

double mean_shift_for_auc(double auc, double sigma) {
  if (!(auc > 0.0 && auc < 1.0)) throw ConfigError("target AUC must lie in (0, 1)");
  return std::numbers::sqrt2 * sigma * boost::math::quantile(boost::math::normal(), auc);
}

namespace {

constexpr std::uint64_t kDirectionStream = 0;
constexpr std::uint64_t kLayerStreamBase = 1000;

std::vector<double> unit_direction(std::uint64_t seed, std::size_t dim) {
  Rng rng(derive_seed(seed, kDirectionStream));
  std::vector<double> u(dim);
  double norm = 0.0;
  while (norm == 0.0) {
    norm = 0.0;
    for (auto& v : u) {
      v = rng.normal();
      norm += v * v;
    }
  }
  norm = std::sqrt(norm);
  for (auto& v : u) v /= norm;
  return u;
}

std::string padded_id(char prefix, std::size_t k, std::size_t width) {
  std::string n = std::to_string(k);
  if (n.size() < width) n.insert(0, width - n.size(), '0');
  return prefix + n;
}

/// Class-shifted Gaussian vectors for one cell, CI members first.
void fill_cell(const SyntheticCell& cell, double shift, double sigma, const std::vector<double>& u, Rng& rng,
               std::vector<std::vector<double>>& out) {
  for (std::size_t k = 0; k < cell.n_ci + cell.n_nci; ++k) {
    const double sign = k < cell.n_ci ? 0.5 : -0.5;
    std::vector<double> x(u.size());
    for (std::size_t d = 0; d < u.size(); ++d) x[d] = sign * shift * u[d] + sigma * rng.normal();
    out.push_back(std::move(x));
  }
}

}  // namespace

SyntheticCohort gen_cohort(const SyntheticSpec& spec) {
  spec.validate();
  SyntheticCohort out;
  out.direction = unit_direction(spec.seed, spec.dim);
  const std::size_t width = std::max<std::size_t>(4, std::to_string(spec.subject_count()).size());
  const std::string tag = "csv" + std::to_string(spec.dim);

  std::size_t next = 1;
  for (std::size_t c = 0; c < spec.cells.size(); ++c) {
    const auto& cell = spec.cells[c];
    Rng feat(derive_seed(spec.seed, 2 * c + 1));
    Rng demo(derive_seed(spec.seed, 2 * c + 2));
    std::vector<std::vector<double>> xs;
    fill_cell(cell, cell.mean_shift, spec.sigma, out.direction, feat, xs);
    for (std::size_t k = 0; k < xs.size(); ++k, ++next) {
      const bool ci = k < cell.n_ci;
      SubjectRecord r;
      r.subject_id = padded_id('S', next, width);
      r.utterance_id = padded_id('U', next, width);
      r.gender = cell.gender;
      r.age = cell.age_group == 1 ? demo.between(50, 65) : demo.between(66, 90);
      r.mmse = ci ? demo.between(10, 23) : demo.between(25, 30);
      r.hamd = cell.depressed ? demo.between(8, 22) : demo.between(0, 7);
      out.features.push_back({std::move(xs[k]), tag, r.utterance_id});
      out.records.push_back(std::move(r));
      out.cell_of.push_back(c);
    }
  }
  return out;
}

std::vector<FeatureVector> gen_layer_features(const SyntheticSpec& spec, const SyntheticCohort& cohort,
                                              const LayerId& layer) {
  validate(layer);
  const auto it = spec.layer_scale.find(layer);
  const double scale = it == spec.layer_scale.end() ? spec.default_layer_scale : it->second;
  const std::uint64_t layer_seed =
      derive_seed(spec.seed, kLayerStreamBase + static_cast<std::uint64_t>(layer.kind) * 100 + layer.index);
  std::vector<FeatureVector> out;
  out.reserve(cohort.records.size());
  std::size_t row = 0;
  for (std::size_t c = 0; c < spec.cells.size(); ++c) {
    const auto& cell = spec.cells[c];
    Rng rng(derive_seed(layer_seed, c));
    std::vector<std::vector<double>> xs;
    fill_cell(cell, cell.mean_shift * scale, spec.sigma, cohort.direction, rng, xs);
    for (auto& x : xs) {
      out.push_back({std::move(x), layer.feature_set_id(), cohort.records.at(row).utterance_id});
      ++row;
    }
  }
  return out;
}

void write_synthetic_cohort(const SyntheticSpec& spec, const std::filesystem::path& out_dir) {
  const auto cohort = gen_cohort(spec);
  std::filesystem::create_directories(out_dir);
  write_manifest(out_dir / "subjects.csv", cohort.records);
  write_feature_csv(out_dir / "features.csv", spec.dim, cohort.features);
  if (spec.layers.empty()) return;

  const auto emb_dir = out_dir / "emb";
  std::filesystem::create_directories(emb_dir);
  std::vector<EmbeddingIndexEntry> index;
  for (const auto& layer : spec.layers) {
    const auto pooled = gen_layer_features(spec, cohort, layer);
    Rng noise(derive_seed(spec.seed, kLayerStreamBase * 2 + static_cast<std::uint64_t>(layer.kind) * 100 + layer.index));
    for (const auto& fv : pooled) {
      EmbeddingArchive a;
      a.utterance_id = fv.utterance_id;
      a.layer = layer;
      a.frames.resize(static_cast<Eigen::Index>(spec.frames_per_utterance), static_cast<Eigen::Index>(spec.dim));
      for (Eigen::Index f = 0; f < a.frames.rows(); ++f) {
        for (Eigen::Index d = 0; d < a.frames.cols(); ++d) {
          a.frames(f, d) = fv.values[static_cast<std::size_t>(d)] + spec.frame_noise * noise.normal();
        }
      }
      const std::string file = fv.utterance_id + "." + layer.name() + ".emb1";
      write_embedding_file(emb_dir / file, a);
      index.push_back({fv.utterance_id, layer, file});
    }
  }
  write_embedding_index(emb_dir / "index.csv", index);
}

std::vector<double> tone_samples(double freq_hz, double duration_s, double amplitude) {
  constexpr double rate = kRequiredSampleRate;
  if (!(freq_hz >= 0.0) || freq_hz >= rate / 2) {
    throw ConfigError("tone frequency must lie in [0, 8000) Hz");
  }
  if (!(duration_s > 0.0)) throw ConfigError("tone duration must be positive");
  if (!(amplitude >= 0.0 && amplitude <= 1.0)) throw ConfigError("tone amplitude must lie in [0, 1]");
  const auto n = static_cast<std::size_t>(std::llround(duration_s * rate));
  if (n == 0) throw ConfigError("tone is shorter than one sample");
  std::vector<double> s(n);
  for (std::size_t k = 0; k < n; ++k) {
    s[k] = amplitude * std::sin(2.0 * std::numbers::pi * freq_hz * static_cast<double>(k) / rate);
  }
  return s;
}

void gen_tone_wav(const std::filesystem::path& path, double freq_hz, double duration_s, double amplitude) {
  write_wav_pcm16(path, tone_samples(freq_hz, duration_s, amplitude));
}

}  // namespace sba
