#include "sba/normalizer.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <span>
#include <vector>

#include "sba/error.hpp"
#include "sba/hash.hpp"

namespace sba {

std::string matrix_hash(const Eigen::MatrixXd& m) {
  std::vector<unsigned char> bytes(2 * sizeof(std::int64_t) + sizeof(double) * static_cast<std::size_t>(m.size()));
  const std::int64_t shape[2] = {m.rows(), m.cols()};
  std::memcpy(bytes.data(), shape, sizeof(shape));
  std::size_t off = sizeof(shape);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double v = m(r, c);
      std::memcpy(bytes.data() + off, &v, sizeof(double));
      off += sizeof(double);
    }
  }
  return sha256_hex(std::span<const unsigned char>(bytes));
}

Normalizer Normalizer::fit(const Eigen::MatrixXd& train) {
  if (train.rows() < 2) throw DataError("normalizer needs at least 2 training samples");
  if (!train.allFinite()) throw DataError("normalizer input is not finite");
  Normalizer n;
  const auto rows = static_cast<double>(train.rows());
  n.mean_ = train.colwise().mean().transpose();
  n.std_.resize(train.cols());
  for (Eigen::Index c = 0; c < train.cols(); ++c) {
    const auto col = train.col(c);
    if ((col.array() == col(0)).all()) {
      n.mean_[c] = col(0);
      n.std_[c] = 0.0;
      continue;
    }
    n.std_[c] = std::sqrt((col.array() - n.mean_[c]).square().sum() / rows);
  }
  n.fit_hash_ = matrix_hash(train);
  return n;
}

Eigen::MatrixXd Normalizer::apply(const Eigen::MatrixXd& features) const {
  if (features.cols() != mean_.size()) throw DataError("normalizer applied to features of a different dimension");
  Eigen::MatrixXd out(features.rows(), features.cols());
  for (Eigen::Index c = 0; c < features.cols(); ++c) {
    if (std_[c] == 0.0) {
      out.col(c).setZero();
    } else {
      out.col(c) = (features.col(c).array() - mean_[c]) / std_[c];
    }
  }
  return out;
}

}  // namespace sba
