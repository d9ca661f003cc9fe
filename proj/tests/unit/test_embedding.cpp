#include <doctest.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "sba/embedding.hpp"
#include "sba/error.hpp"
#include "sba/rng.hpp"
#include "support.hpp"

using namespace sba;

namespace {

// Byte-level EMB1 writer kept separate from the library's, so the reader is
// checked against the documented layout rather than against itself.
std::string emb1_bytes(std::uint8_t kind, std::uint32_t index, std::uint32_t frames, std::uint32_t dim,
                       const std::vector<float>& values) {
  static_assert(std::endian::native == std::endian::little);
  std::string out = "EMB1";
  out.push_back(static_cast<char>(kind));
  for (std::uint32_t v : {index, frames, dim}) out.append(reinterpret_cast<const char*>(&v), 4);
  out.append(reinterpret_cast<const char*>(values.data()), values.size() * sizeof(float));
  return out;
}

Eigen::MatrixXd random_frames(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<float>(rng.normal() * 3.0);
  return m;
}

}  // namespace

TEST_SUITE("embedding_ingest") {
  TEST_CASE("layer ids parse and print") {
    CHECK(parse_layer("hidden-9") == LayerId{LayerKind::hidden, 9});
    CHECK(parse_layer("latent-3") == LayerId{LayerKind::latent, 3});
    CHECK(parse_layer("h12") == LayerId{LayerKind::hidden, 12});
    CHECK(parse_layer("l2") == LayerId{LayerKind::latent, 2});
    CHECK(parse_layer("10") == LayerId{LayerKind::hidden, 10});
    CHECK(LayerId{LayerKind::hidden, 9}.feature_set_id() == "w2v2-hidden-9");
    CHECK_THROWS(parse_layer("hidden-13"));
    CHECK_THROWS(parse_layer("bogus"));
  }

  TEST_CASE("3x4 archive round-trips exactly") {
    testing::TempDir dir;
    Rng rng(2);
    EmbeddingArchive a{"u1", {LayerKind::hidden, 9}, random_frames(rng, 3, 4)};
    write_embedding_file(dir / "a.emb1", a);
    const auto b = read_embedding_file(dir / "a.emb1", "u1");
    CHECK(b.layer == a.layer);
    CHECK(b.utterance_id == "u1");
    CHECK((b.frames.array() == a.frames.array()).all());
  }

  TEST_CASE("round trip is value-exact for arbitrary finite float32 payloads") {
    testing::TempDir dir;
    Rng rng(77);
    for (int trial = 0; trial < 25; ++trial) {
      const auto rows = static_cast<std::uint32_t>(rng.between(1, 7));
      const auto cols = static_cast<std::uint32_t>(rng.between(1, 9));
      std::vector<float> vals;
      while (vals.size() < rows * cols) {
        const auto bits = static_cast<std::uint32_t>(rng.next());
        const float f = std::bit_cast<float>(bits);
        if (std::isfinite(f)) vals.push_back(f);
      }
      testing::spit(dir / "r.emb1", emb1_bytes(0, 4, rows, cols, vals));
      const auto a = read_embedding_file(dir / "r.emb1");
      CHECK(a.layer == LayerId{LayerKind::latent, 4});
      for (std::uint32_t r = 0; r < rows; ++r) {
        for (std::uint32_t c = 0; c < cols; ++c) {
          REQUIRE(static_cast<float>(a.frames(r, c)) == vals[r * cols + c]);
        }
      }
      write_embedding_file(dir / "w.emb1", a);
      CHECK(testing::slurp(dir / "w.emb1") == testing::slurp(dir / "r.emb1"));
    }
  }

  TEST_CASE("malformed archives") {
    testing::TempDir dir;
    std::vector<float> nine(9 * 2, 1.0f);
    testing::spit(dir / "trunc.emb1", emb1_bytes(1, 9, 10, 2, nine));
    CHECK_THROWS_WITH_AS(read_embedding_file(dir / "trunc.emb1"), doctest::Contains("truncated payload"), DataError);

    std::string bad = emb1_bytes(1, 9, 1, 2, {1.0f, 2.0f});
    bad[0] = 'X';
    testing::spit(dir / "magic.emb1", bad);
    CHECK_THROWS_WITH_AS(read_embedding_file(dir / "magic.emb1"), doctest::Contains("bad magic"), DataError);

    testing::spit(dir / "zero.emb1", emb1_bytes(1, 9, 0, 2, {}));
    CHECK_THROWS_AS(read_embedding_file(dir / "zero.emb1"), DataError);

    testing::spit(dir / "nan.emb1", emb1_bytes(1, 9, 1, 2, {1.0f, std::numeric_limits<float>::quiet_NaN()}));
    CHECK_THROWS_AS(read_embedding_file(dir / "nan.emb1"), DataError);

    testing::spit(dir / "inf.emb1", emb1_bytes(1, 9, 1, 1, {std::numeric_limits<float>::infinity()}));
    CHECK_THROWS_AS(read_embedding_file(dir / "inf.emb1"), DataError);
  }

  TEST_CASE("pool_embedding examples") {
    Eigen::MatrixXd one(1, 3);
    one << 0.25, -1.5, 8.0;
    const auto p1 = pool_embedding({"u", {LayerKind::hidden, 9}, one});
    CHECK(p1.values == std::vector<double>{0.25, -1.5, 8.0});
    CHECK(p1.feature_set_id == "w2v2-hidden-9");
    CHECK(p1.utterance_id == "u");

    Eigen::MatrixXd two(2, 2);
    two << 0, 0, 2, 4;
    CHECK(pool_embedding({"u", {LayerKind::latent, 1}, two}).values == std::vector<double>{1.0, 2.0});
  }

  TEST_CASE("pool_embedding commutes with frame permutation") {
    Rng rng(8);
    for (int trial = 0; trial < 10; ++trial) {
      const auto m = random_frames(rng, 12, 6);
      Eigen::MatrixXd rev = m.colwise().reverse();
      const auto a = pool_embedding({"u", {LayerKind::hidden, 1}, m});
      const auto b = pool_embedding({"u", {LayerKind::hidden, 1}, rev});
      CHECK(a.values == b.values);
    }
  }

  TEST_CASE("index: N listed archives load N vectors or fail as a whole") {
    testing::TempDir dir;
    Rng rng(4);
    std::vector<EmbeddingIndexEntry> entries;
    std::vector<Eigen::MatrixXd> originals;
    for (int u = 0; u < 5; ++u) {
      for (std::uint32_t layer : {9u, 10u}) {
        const std::string utt = "utt" + std::to_string(u);
        const auto path = dir / (utt + ".hidden-" + std::to_string(layer) + ".emb1");
        EmbeddingArchive a{utt, {LayerKind::hidden, layer}, random_frames(rng, 2 + u, 3)};
        write_embedding_file(path, a);
        entries.push_back({utt, a.layer, path});
        if (layer == 9) originals.push_back(a.frames);
      }
    }
    write_embedding_index(dir / "index.csv", entries);
    // Paths under the index directory are stored relative.
    CHECK(testing::slurp(dir / "index.csv").find(dir.path().string()) == std::string::npos);

    const auto back = read_embedding_index(dir / "index.csv");
    REQUIRE(back.size() == entries.size());
    CHECK(indexed_layers(back) == std::vector<LayerId>{{LayerKind::hidden, 9}, {LayerKind::hidden, 10}});

    const auto l9 = load_layer_features(dir / "index.csv", {LayerKind::hidden, 9});
    REQUIRE(l9.size() == 5);
    for (std::size_t i = 0; i < l9.size(); ++i) {
      const Eigen::VectorXd mean = originals[i].colwise().mean();
      for (Eigen::Index c = 0; c < mean.size(); ++c) CHECK(l9[i].values[c] == doctest::Approx(mean[c]).epsilon(1e-12));
    }

    std::filesystem::remove(dir / "utt3.hidden-9.emb1");
    CHECK_THROWS_AS(load_layer_features(dir / "index.csv", {LayerKind::hidden, 9}), DataError);
    CHECK(load_layer_features(dir / "index.csv", {LayerKind::hidden, 10}).size() == 5);
    CHECK_THROWS_AS(load_layer_features(dir / "index.csv", {LayerKind::hidden, 3}), DataError);
  }

  TEST_CASE("index: header layer must agree with the index row") {
    testing::TempDir dir;
    EmbeddingArchive a{"u", {LayerKind::hidden, 9}, Eigen::MatrixXd::Ones(2, 2)};
    write_embedding_file(dir / "a.emb1", a);
    write_embedding_index(dir / "index.csv", {{"u", {LayerKind::hidden, 10}, dir / "a.emb1"}});
    CHECK_THROWS_AS(load_layer_features(dir / "index.csv", {LayerKind::hidden, 10}), DataError);
  }

  TEST_CASE("index: duplicate entries are rejected") {
    testing::TempDir dir;
    testing::spit(dir / "index.csv", "utterance_id,layer_kind,layer_index,path\nu,hidden,9,a.emb1\nu,hidden,9,b.emb1\n");
    CHECK_THROWS_AS(read_embedding_index(dir / "index.csv"), DataError);
  }
}
