#include "sba/mfcc.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>

#include "sba/error.hpp"

namespace sba {

namespace {

// FFTW's planner is not re-entrant; execution on distinct buffers is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

struct PlanDestroy {
  void operator()(fftw_plan_s* p) const {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(p);
  }
};

/// Magnitude spectra of every frame, `n_frames x (window/2 + 1)`.
Eigen::MatrixXd magnitude_frames(const AudioBuffer& buffer, const MfccConfig& config) {
  config.validate();
  const std::size_t n = config.window;
  const std::size_t n_bins = n / 2 + 1;
  const std::size_t n_frames = frame_count(buffer.samples.size(), config);

  std::unique_ptr<double, FftwFree> in(static_cast<double*>(fftw_malloc(sizeof(double) * n)));
  std::unique_ptr<fftw_complex, FftwFree> out(
      static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n_bins)));
  std::unique_ptr<fftw_plan_s, PlanDestroy> plan;
  {
    std::lock_guard lock(planner_mutex());
    plan.reset(fftw_plan_dft_r2c_1d(static_cast<int>(n), in.get(), out.get(), FFTW_ESTIMATE));
  }
  if (!plan) throw NumericError("FFT plan creation failed");

  const Eigen::VectorXd window = hann_window(n);
  Eigen::MatrixXd mags(n_frames, n_bins);
  for (std::size_t f = 0; f < n_frames; ++f) {
    const double* src = buffer.samples.data() + f * config.hop;
    for (std::size_t i = 0; i < n; ++i) in.get()[i] = src[i] * window[static_cast<Eigen::Index>(i)];
    fftw_execute(plan.get());
    for (std::size_t k = 0; k < n_bins; ++k) {
      mags(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(k)) = std::hypot(out.get()[k][0], out.get()[k][1]);
    }
  }
  return mags;
}

}  // namespace

void MfccConfig::validate() const {
  if (window < 2) throw ConfigError("MFCC window must be at least 2 samples");
  if (hop == 0 || hop > window) throw ConfigError("MFCC hop must be in [1, window]");
  if (n_mels == 0 || n_coeffs == 0 || n_coeffs > n_mels) throw ConfigError("MFCC needs 0 < n_coeffs <= n_mels");
  if (!(log_floor > 0.0)) throw ConfigError("MFCC log floor must be positive");
  if (!(f_min >= 0.0 && f_max > f_min)) throw ConfigError("MFCC frequency range is empty");
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

Eigen::MatrixXd mel_filterbank(const MfccConfig& config, int sample_rate) {
  config.validate();
  const std::size_t n_bins = config.window / 2 + 1;
  const double mel_lo = hz_to_mel(config.f_min);
  const double mel_hi = hz_to_mel(config.f_max);

  std::vector<double> edges(config.n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) / static_cast<double>(config.n_mels + 1));
  }

  Eigen::MatrixXd bank = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(config.n_mels), static_cast<Eigen::Index>(n_bins));
  for (std::size_t m = 0; m < config.n_mels; ++m) {
    const double lo = edges[m], centre = edges[m + 1], hi = edges[m + 2];
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double hz = static_cast<double>(k) * sample_rate / static_cast<double>(config.window);
      const double rising = (hz - lo) / (centre - lo);
      const double falling = (hi - hz) / (hi - centre);
      bank(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k)) = std::max(0.0, std::min(rising, falling));
    }
  }
  return bank;
}

Eigen::VectorXd hann_window(std::size_t length) {
  Eigen::VectorXd w(static_cast<Eigen::Index>(length));
  for (std::size_t i = 0; i < length; ++i) {
    w[static_cast<Eigen::Index>(i)] =
        0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(length));
  }
  return w;
}

std::size_t frame_count(std::size_t n_samples, const MfccConfig& config) {
  if (n_samples < config.window) {
    throw DataError("audio shorter than one analysis window (" + std::to_string(n_samples) + " < " +
                    std::to_string(config.window) + " samples)");
  }
  return (n_samples - config.window) / config.hop + 1;
}

Eigen::MatrixXd log_mel_frames(const AudioBuffer& buffer, const MfccConfig& config) {
  const Eigen::MatrixXd mags = magnitude_frames(buffer, config);
  const Eigen::MatrixXd bank = mel_filterbank(config, buffer.sample_rate);
  Eigen::MatrixXd energies = mags * bank.transpose();
  return energies.unaryExpr([floor = config.log_floor](double e) { return std::log(std::max(e, floor)); });
}

Eigen::MatrixXd dct_matrix(std::size_t n_coeffs, std::size_t n_inputs) {
  Eigen::MatrixXd d(static_cast<Eigen::Index>(n_coeffs), static_cast<Eigen::Index>(n_inputs));
  const double n = static_cast<double>(n_inputs);
  for (std::size_t k = 0; k < n_coeffs; ++k) {
    const double scale = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    for (std::size_t i = 0; i < n_inputs; ++i) {
      d(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) =
          scale * std::cos(std::numbers::pi * static_cast<double>(k) * (2.0 * static_cast<double>(i) + 1.0) / (2.0 * n));
    }
  }
  return d;
}

Eigen::MatrixXd mfcc(const AudioBuffer& buffer, const MfccConfig& config) {
  const Eigen::MatrixXd log_mel = log_mel_frames(buffer, config);
  Eigen::MatrixXd cepstra = log_mel * dct_matrix(config.n_coeffs, config.n_mels).transpose();
  if (!cepstra.allFinite()) throw NumericError("non-finite MFCC coefficient");
  return cepstra;
}

Eigen::VectorXd column_means(const Eigen::MatrixXd& frames) {
  if (frames.rows() == 0 || frames.cols() == 0) throw DataError("cannot pool an empty frame matrix");
  // Summing each column in sorted order around its minimum makes the result
  // independent of frame order and exact for constant columns.
  Eigen::VectorXd means(frames.cols());
  std::vector<double> column(static_cast<std::size_t>(frames.rows()));
  for (Eigen::Index c = 0; c < frames.cols(); ++c) {
    for (Eigen::Index r = 0; r < frames.rows(); ++r) column[static_cast<std::size_t>(r)] = frames(r, c);
    std::sort(column.begin(), column.end());
    const double pivot = column.front();
    double offset = 0.0;
    for (double v : column) offset += v - pivot;
    means[c] = pivot + offset / static_cast<double>(column.size());
  }
  return means;
}

FeatureVector mean_pool(const Eigen::MatrixXd& frames, std::string feature_set_id, std::string utterance_id) {
  const Eigen::VectorXd means = column_means(frames);
  return FeatureVector{std::vector<double>(means.data(), means.data() + means.size()), std::move(feature_set_id),
                       std::move(utterance_id)};
}

}  // namespace sba
