#pragma once

#include <Eigen/Dense>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "sba/features.hpp"

namespace sba {

enum class LayerKind : std::uint8_t { latent = 0, hidden = 1 };

/// A model layer. Hidden (transformer) layers are numbered 1..12; latent
/// (convolutional encoder) indices are whatever the exporter assigned, >= 1.
struct LayerId {
  LayerKind kind = LayerKind::hidden;
  std::uint32_t index = 1;

  /// `hidden-9`, `latent-3`.
  std::string name() const;
  /// `w2v2-hidden-9`.
  std::string feature_set_id() const;

  friend auto operator<=>(const LayerId&, const LayerId&) = default;
};

/// Accepts `hidden-9`, `latent-3`, `h9`, `l3` or a bare number (hidden).
LayerId parse_layer(std::string_view text);
void validate(const LayerId& layer);

struct EmbeddingArchive {
  std::string utterance_id;
  LayerId layer;
  Eigen::MatrixXd frames;  // n_frames x dim
};

/// EMB1 little-endian layout:
///   "EMB1" | u8 kind | u32 layer index | u32 n_frames | u32 dim | float32[n_frames*dim] row-major
EmbeddingArchive read_embedding_file(const std::filesystem::path& path, std::string utterance_id = {});

/// Values are narrowed to float32.
void write_embedding_file(const std::filesystem::path& path, const EmbeddingArchive& archive);

/// Frame-mean of the archive, tagged with the layer's feature-set id.
FeatureVector pool_embedding(const EmbeddingArchive& archive);

struct EmbeddingIndexEntry {
  std::string utterance_id;
  LayerId layer;
  std::filesystem::path path;  // resolved against the index file's directory
};

/// Index CSV: utterance_id, layer_kind, layer_index, path.
std::vector<EmbeddingIndexEntry> read_embedding_index(const std::filesystem::path& index_path);
void write_embedding_index(const std::filesystem::path& index_path, const std::vector<EmbeddingIndexEntry>& entries);

/// All layers listed in an index, sorted.
std::vector<LayerId> indexed_layers(const std::vector<EmbeddingIndexEntry>& entries);

/// Pools every archive of `layer` listed in the index. Either all listed
/// archives load or DataError is thrown; no partial cohort is returned.
std::vector<FeatureVector> load_layer_features(const std::filesystem::path& index_path, const LayerId& layer);

}  // namespace sba
