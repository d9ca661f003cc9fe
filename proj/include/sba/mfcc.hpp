#pragma once

#include <Eigen/Dense>
#include <string>

#include "sba/audio.hpp"
#include "sba/features.hpp"

namespace sba {

/// Short-time MFCC settings. Analysis is Hann window -> |FFT| -> HTK-mel
/// triangular filterbank over [f_min, f_max] -> natural log with floor ->
/// orthonormal DCT-II, keeping the first `n_coeffs` coefficients.
struct MfccConfig {
  std::size_t n_coeffs = 40;
  std::size_t window = 2048;
  std::size_t hop = 512;
  std::size_t n_mels = 128;
  double log_floor = 1e-10;
  double f_min = 0.0;
  double f_max = 8000.0;

  void validate() const;
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// `n_mels x (window/2 + 1)` triangular weights with unit peak.
Eigen::MatrixXd mel_filterbank(const MfccConfig& config, int sample_rate = kRequiredSampleRate);

/// Periodic Hann window of the configured length.
Eigen::VectorXd hann_window(std::size_t length);

/// Number of full frames: floor((len - window) / hop) + 1.
std::size_t frame_count(std::size_t n_samples, const MfccConfig& config);

/// `n_frames x n_mels` log-mel energies (the pre-DCT representation).
Eigen::MatrixXd log_mel_frames(const AudioBuffer& buffer, const MfccConfig& config);

/// `n_frames x n_coeffs` cepstra.
Eigen::MatrixXd mfcc(const AudioBuffer& buffer, const MfccConfig& config);

/// Orthonormal DCT-II basis restricted to the first `n_coeffs` rows.
Eigen::MatrixXd dct_matrix(std::size_t n_coeffs, std::size_t n_inputs);

/// Column means of a frame matrix. Throws DataError on an empty matrix.
Eigen::VectorXd column_means(const Eigen::MatrixXd& frames);

/// Mean over time, tagged as a FeatureVector.
FeatureVector mean_pool(const Eigen::MatrixXd& frames, std::string feature_set_id = "mfcc40",
                        std::string utterance_id = {});

}  // namespace sba
