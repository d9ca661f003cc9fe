#include "sba/features.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include "sba/csv.hpp"
#include "sba/error.hpp"

namespace sba {

std::optional<std::size_t> declared_dimension(std::string_view feature_set_id) {
  if (feature_set_id == "mfcc40") return 40;
  if (feature_set_id == "egemaps88") return 88;
  if (feature_set_id.starts_with("csv")) {
    std::size_t dim = 0;
    const auto digits = feature_set_id.substr(3);
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), dim);
    if (ec == std::errc{} && ptr == digits.data() + digits.size()) return dim;
  }
  return std::nullopt;
}

void validate(const FeatureVector& vector) {
  if (vector.values.empty()) throw DataError("feature vector for '" + vector.utterance_id + "' is empty");
  if (const auto dim = declared_dimension(vector.feature_set_id); dim && *dim != vector.values.size()) {
    throw DataError("feature vector for '" + vector.utterance_id + "' has " + std::to_string(vector.values.size()) +
                    " values but " + vector.feature_set_id + " declares " + std::to_string(*dim));
  }
  for (double v : vector.values) {
    if (!std::isfinite(v)) throw DataError("feature vector for '" + vector.utterance_id + "' is not finite");
  }
}

std::vector<FeatureVector> ingest_feature_csv(const std::filesystem::path& path, std::size_t expected_dim,
                                              std::string feature_set_id) {
  if (expected_dim == 0) throw ConfigError("expected feature dimension must be positive");
  if (feature_set_id.empty()) {
    feature_set_id = expected_dim == 40   ? "mfcc40"
                     : expected_dim == 88 ? "egemaps88"
                                          : "csv" + std::to_string(expected_dim);
  }
  const std::string name = path.string();
  if (const auto dim = declared_dimension(feature_set_id); dim && *dim != expected_dim) {
    throw DataError(name + ": " + feature_set_id + " declares " + std::to_string(*dim) + " features, expected " +
                    std::to_string(expected_dim));
  }
  const csv::Table table = csv::read(path);
  if (table.header.empty() || table.header.front() != "utterance_id") {
    throw DataError(name + ": first column must be utterance_id");
  }
  if (table.header.size() != expected_dim + 1) {
    throw DataError(name + ": header declares " + std::to_string(table.header.size() - 1) + " feature columns, expected " +
                    std::to_string(expected_dim));
  }

  std::vector<FeatureVector> out;
  out.reserve(table.rows.size());
  std::unordered_set<std::string> seen;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string where = name + " line " + std::to_string(table.line_numbers[r]);
    if (row.size() != expected_dim + 1) {
      throw DataError(where + ": dimension mismatch, expected " + std::to_string(expected_dim) +
                      " feature columns, found " + std::to_string(row.empty() ? 0 : row.size() - 1));
    }
    if (row[0].empty()) throw DataError(where + ": empty utterance_id");
    if (!seen.insert(row[0]).second) throw DataError(where + ": duplicate utterance_id '" + row[0] + "'");
    FeatureVector fv{{}, feature_set_id, row[0]};
    fv.values.reserve(expected_dim);
    for (std::size_t c = 1; c < row.size(); ++c) {
      const double v = csv::parse_double(row[c], where + " column " + table.header[c]);
      if (!std::isfinite(v)) throw DataError(where + ": non-finite value in column " + table.header[c]);
      fv.values.push_back(v);
    }
    out.push_back(std::move(fv));
  }
  return out;
}

void write_feature_csv(const std::filesystem::path& path, std::size_t dim, std::span<const FeatureVector> vectors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  csv::Row header{"utterance_id"};
  for (std::size_t i = 1; i <= dim; ++i) header.push_back("f" + std::to_string(i));
  csv::write_row(out, header);
  for (const auto& fv : vectors) {
    if (fv.values.size() != dim) throw DataError("feature vector '" + fv.utterance_id + "' has wrong dimension");
    csv::Row row{fv.utterance_id};
    for (double v : fv.values) row.push_back(csv::format_double(v));
    csv::write_row(out, row);
  }
}

}  // namespace sba
