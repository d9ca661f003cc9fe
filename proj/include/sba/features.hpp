#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sba {

/// One fixed-length utterance representation. `feature_set_id` is one of
/// `mfcc40`, `egemaps88`, `w2v2-hidden-<k>`, `w2v2-latent-<k>` or a custom tag.
struct FeatureVector {
  std::vector<double> values;
  std::string feature_set_id;
  std::string utterance_id;
};

/// Dimension implied by a feature-set tag, if the tag fixes one.
std::optional<std::size_t> declared_dimension(std::string_view feature_set_id);

/// Throws DataError if the vector is empty, non-finite or contradicts its tag.
void validate(const FeatureVector& vector);

/// Reads `utterance_id,f1..f<expected_dim>`. An empty `feature_set_id` is
/// inferred from the dimension (40 -> mfcc40, 88 -> egemaps88, else csv<d>).
std::vector<FeatureVector> ingest_feature_csv(const std::filesystem::path& path,
                                              std::size_t expected_dim,
                                              std::string feature_set_id = {});

/// Writes the same layout with round-trip precision.
void write_feature_csv(const std::filesystem::path& path, std::size_t dim,
                       std::span<const FeatureVector> vectors);

}  // namespace sba
