#include "sba/embedding.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <set>

#include "sba/csv.hpp"
#include "sba/error.hpp"
#include "sba/mfcc.hpp"

namespace sba {

namespace {

constexpr char kMagic[4] = {'E', 'M', 'B', '1'};
constexpr std::size_t kHeaderBytes = 4 + 1 + 4 + 4 + 4;

template <class T>
T read_le(const std::vector<char>& bytes, std::size_t offset) {
  T value{};
  std::memcpy(&value, bytes.data() + offset, sizeof(T));
  return value;
}

template <class T>
void put_le(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

std::string_view kind_name(LayerKind kind) { return kind == LayerKind::hidden ? "hidden" : "latent"; }

LayerKind parse_kind(std::string_view s) {
  if (s == "hidden" || s == "1") return LayerKind::hidden;
  if (s == "latent" || s == "0") return LayerKind::latent;
  throw DataError("unknown layer kind '" + std::string(s) + "'");
}

}  // namespace

std::string LayerId::name() const { return std::string(kind_name(kind)) + "-" + std::to_string(index); }

std::string LayerId::feature_set_id() const { return "w2v2-" + name(); }

void validate(const LayerId& layer) {
  if (layer.kind == LayerKind::hidden && (layer.index < 1 || layer.index > 12)) {
    throw DataError("hidden layer index " + std::to_string(layer.index) + " outside [1, 12]");
  }
  if (layer.kind == LayerKind::latent && layer.index < 1) throw DataError("latent layer index must be >= 1");
}

LayerId parse_layer(std::string_view text) {
  LayerId id;
  std::string_view digits = text;
  if (text.starts_with("hidden-")) {
    digits = text.substr(7);
  } else if (text.starts_with("latent-")) {
    id.kind = LayerKind::latent;
    digits = text.substr(7);
  } else if (text.starts_with("h")) {
    digits = text.substr(1);
  } else if (text.starts_with("l")) {
    id.kind = LayerKind::latent;
    digits = text.substr(1);
  }
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), id.index);
  if (digits.empty() || ec != std::errc{} || ptr != digits.data() + digits.size()) {
    throw ConfigError("cannot parse layer '" + std::string(text) + "'");
  }
  validate(id);
  return id;
}

EmbeddingArchive read_embedding_file(const std::filesystem::path& path, std::string utterance_id) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  const std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string name = path.string();

  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw DataError(name + ": bad magic");
  if (bytes.size() < kHeaderBytes) throw DataError(name + ": truncated header");

  const auto kind_byte = static_cast<std::uint8_t>(bytes[4]);
  if (kind_byte > 1) throw DataError(name + ": unknown layer kind byte " + std::to_string(kind_byte));
  LayerId layer{static_cast<LayerKind>(kind_byte), read_le<std::uint32_t>(bytes, 5)};
  validate(layer);
  const std::uint32_t n_frames = read_le<std::uint32_t>(bytes, 9);
  const std::uint32_t dim = read_le<std::uint32_t>(bytes, 13);
  if (n_frames == 0) throw DataError(name + ": archive has zero frames");
  if (dim == 0) throw DataError(name + ": archive has zero dimension");

  const std::size_t expected = kHeaderBytes + std::size_t{n_frames} * dim * sizeof(float);
  if (bytes.size() < expected) {
    throw DataError(name + ": truncated payload (" + std::to_string(bytes.size() - kHeaderBytes) + " of " +
                    std::to_string(expected - kHeaderBytes) + " bytes)");
  }
  if (bytes.size() > expected) throw DataError(name + ": trailing bytes after payload");

  EmbeddingArchive archive{std::move(utterance_id), layer, Eigen::MatrixXd(n_frames, dim)};
  for (std::uint32_t r = 0; r < n_frames; ++r) {
    for (std::uint32_t c = 0; c < dim; ++c) {
      const float v = read_le<float>(bytes, kHeaderBytes + (std::size_t{r} * dim + c) * sizeof(float));
      if (!std::isfinite(v)) throw DataError(name + ": NaN/Inf in payload");
      archive.frames(r, c) = static_cast<double>(v);
    }
  }
  return archive;
}

void write_embedding_file(const std::filesystem::path& path, const EmbeddingArchive& archive) {
  validate(archive.layer);
  if (archive.frames.rows() == 0 || archive.frames.cols() == 0) throw DataError("cannot write an empty archive");
  if (!archive.frames.allFinite()) throw NumericError("cannot write a non-finite archive");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(kMagic, 4);
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(archive.layer.kind));
  put_le<std::uint32_t>(out, archive.layer.index);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(archive.frames.rows()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(archive.frames.cols()));
  for (Eigen::Index r = 0; r < archive.frames.rows(); ++r) {
    for (Eigen::Index c = 0; c < archive.frames.cols(); ++c) put_le<float>(out, static_cast<float>(archive.frames(r, c)));
  }
}

FeatureVector pool_embedding(const EmbeddingArchive& archive) {
  return mean_pool(archive.frames, archive.layer.feature_set_id(), archive.utterance_id);
}

std::vector<EmbeddingIndexEntry> read_embedding_index(const std::filesystem::path& index_path) {
  const csv::Table table = csv::read(index_path);
  const std::size_t c_utt = table.column("utterance_id");
  const std::size_t c_kind = table.column("layer_kind");
  const std::size_t c_index = table.column("layer_index");
  const std::size_t c_path = table.column("path");
  const std::filesystem::path base = index_path.parent_path();

  std::vector<EmbeddingIndexEntry> entries;
  std::set<std::pair<std::string, LayerId>> seen;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string where = index_path.string() + " line " + std::to_string(table.line_numbers[r]);
    if (row.size() != table.header.size()) throw DataError(where + ": wrong number of columns");
    const long long idx = csv::parse_int(row[c_index], where);
    if (idx < 0 || idx > 0xFFFFFFFFLL) throw DataError(where + ": layer index out of range");
    LayerId layer{parse_kind(row[c_kind]), static_cast<std::uint32_t>(idx)};
    validate(layer);
    if (!seen.emplace(row[c_utt], layer).second) throw DataError(where + ": duplicate (utterance, layer) entry");
    std::filesystem::path p = row[c_path];
    if (p.is_relative()) p = base / p;
    entries.push_back({row[c_utt], layer, p});
  }
  return entries;
}

void write_embedding_index(const std::filesystem::path& index_path, const std::vector<EmbeddingIndexEntry>& entries) {
  std::ofstream out(index_path, std::ios::binary);
  if (!out) throw DataError("cannot write " + index_path.string());
  csv::write_row(out, {"utterance_id", "layer_kind", "layer_index", "path"});
  const std::filesystem::path base = index_path.parent_path();
  for (const auto& e : entries) {
    std::filesystem::path p = e.path;
    if (p.is_absolute() && !base.empty()) {
      const auto rel = p.lexically_relative(base);
      if (!rel.empty() && !rel.string().starts_with("..")) p = rel;
    }
    csv::write_row(out, {e.utterance_id, std::string(kind_name(e.layer.kind)), std::to_string(e.layer.index),
                         p.generic_string()});
  }
}

std::vector<LayerId> indexed_layers(const std::vector<EmbeddingIndexEntry>& entries) {
  std::set<LayerId> layers;
  for (const auto& e : entries) layers.insert(e.layer);
  return {layers.begin(), layers.end()};
}

std::vector<FeatureVector> load_layer_features(const std::filesystem::path& index_path, const LayerId& layer) {
  const auto entries = read_embedding_index(index_path);
  std::vector<FeatureVector> out;
  std::size_t dim = 0;
  for (const auto& e : entries) {
    if (e.layer != layer) continue;
    EmbeddingArchive archive = read_embedding_file(e.path, e.utterance_id);
    if (archive.layer != layer) {
      throw DataError(e.path.string() + ": header layer " + archive.layer.name() + " disagrees with index (" +
                      layer.name() + ")");
    }
    if (dim == 0) dim = static_cast<std::size_t>(archive.frames.cols());
    if (static_cast<std::size_t>(archive.frames.cols()) != dim) {
      throw DataError(e.path.string() + ": dimension differs from other archives of " + layer.name());
    }
    out.push_back(pool_embedding(archive));
  }
  if (out.empty()) throw DataError(index_path.string() + ": no archives listed for layer " + layer.name());
  return out;
}

}  // namespace sba
