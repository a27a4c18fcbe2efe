#include <bit>
#include <cmath>
#include <cstring>
#include <numbers>

#include "doctest.h"
#include "gazeaug/io.hpp"
#include "gazeaug/toy.hpp"
#include "support.hpp"

using namespace gazeaug;
using gazeaug::testing::randomDirection;
using gazeaug::testing::TempDir;

namespace {

void le32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void lef32(std::vector<std::uint8_t>& out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  le32(out, bits);
}

std::vector<std::uint8_t> gzftBytes(std::uint32_t version, std::uint32_t count, std::uint32_t dim,
                                    const std::vector<float>& values) {
  std::vector<std::uint8_t> out{'G', 'Z', 'F', 'T'};
  le32(out, version);
  le32(out, count);
  le32(out, dim);
  for (float v : values) lef32(out, v);
  return out;
}

template <typename Fn>
const ParseError* expectParse(Fn&& fn, std::optional<ParseError>& slot) {
  try {
    fn();
  } catch (const ParseError& e) {
    slot.emplace(e);
    return &*slot;
  }
  return nullptr;
}

}  // namespace

TEST_CASE("manifest lines round-trip 17 significant digits") {
  Rng rng(81);
  for (int i = 0; i < 1000; ++i) {
    const ManifestEntry e{"s" + std::to_string(i), "img/\"q\".png", "m.mesh", randomDirection(rng),
                          randomDirection(rng), "cam"};
    const ManifestEntry back = parseManifestLine(manifestLine(e));
    CHECK(back == e);
    CHECK(manifestLine(back) == manifestLine(e));
  }
  const ManifestEntry pi{"s", "a.png", "-", Direction{0, std::numbers::pi}, Direction{-1.5, -2}, ""};
  CHECK(parseManifestLine(manifestLine(pi)).head.yaw == std::numbers::pi);
  CHECK(manifestLine(pi).find("\"subject\"") < manifestLine(pi).find("\"image\""));
}

TEST_CASE("manifest files rewrite byte-identically and report line numbers") {
  TempDir tmp("man");
  Rng rng(82);
  std::vector<ManifestEntry> rows;
  for (int i = 0; i < 5; ++i) rows.push_back({"s", std::to_string(i) + ".png", "-", randomDirection(rng), randomDirection(rng), ""});
  writeManifest(tmp.str("a.jsonl"), rows);
  writeManifest(tmp.str("b.jsonl"), readManifest(tmp.str("a.jsonl")));
  CHECK(readBytes(tmp.str("a.jsonl")) == readBytes(tmp.str("b.jsonl")));

  std::string text = readText(tmp.str("a.jsonl"));
  text += "\n{\"subject\":\"s\"}\n";
  writeText(tmp.str("bad.jsonl"), text);
  std::optional<ParseError> slot;
  const ParseError* e = expectParse([&] { readManifest(tmp.str("bad.jsonl")); }, slot);
  REQUIRE(e);
  CHECK(e->unit() == ParseError::Unit::Line);
  CHECK(e->position() == 7);
  CHECK(std::string(e->what()).find("bad.jsonl:7") != std::string::npos);

  CHECK(expectParse([] { parseManifestLine("not json"); }, slot));
  CHECK(expectParse([] {
    parseManifestLine(R"({"subject":"s","image":"a","mesh":"m","head_pitch":3,"head_yaw":0,"gaze_pitch":0,"gaze_yaw":0,"camera":""})");
  }, slot));
  CHECK_THROWS_AS(readManifest(tmp.str("missing.jsonl")), Error);
}

TEST_CASE("mesh text round trip and line-numbered errors") {
  const FaceMesh m = toyFaceMesh(0, 4, 6);
  const FaceMesh back = parseMesh(meshText(m));
  CHECK(back.vertices == m.vertices);
  CHECK(back.colors == m.colors);
  CHECK(back.triangles == m.triangles);
  CHECK(back.landmarks == m.landmarks);
  CHECK(back.face_center == m.face_center);
  CHECK(meshText(back) == meshText(m));

  const std::string ok = "# tri\nv 0 0 0 1 0 0\nv 1 0 0 0 1 0\n\nv 0 1 0 0 0 1\nf 1 2 3\nl 1\nl 2\n";
  const FaceMesh t = parseMesh(ok);
  CHECK(t.vertices.rows() == 3);
  CHECK((t.face_center - Vector3d(0.5, 0, 0)).norm() < 1e-15);

  std::optional<ParseError> slot;
  const ParseError* e = expectParse([&] { parseMesh(ok + "f 1 2 9\n"); }, slot);
  REQUIRE(e);
  CHECK(e->position() == 9);
  e = expectParse([&] { parseMesh("v 0 0 0 1 0 0\nv 0 x 0 1 0 0\n"); }, slot);
  REQUIRE(e);
  CHECK(e->position() == 2);
  e = expectParse([&] { parseMesh(ok + "q 1\n"); }, slot);
  REQUIRE(e);
  CHECK(e->position() == 9);
}

TEST_CASE("PNG round trip is exact on quantized values") {
  TempDir tmp("png");
  Rng rng(83);
  ImageBuffer img(17, 9);
  for (double& v : img.data()) v = static_cast<double>(uniformIndex(rng, 256)) / 255.0;
  writePng(tmp.str("a.png"), img);
  CHECK(readPng(tmp.str("a.png")) == img);
  CHECK_THROWS_AS(readPng(tmp.str("none.png")), Error);
  writeText(tmp.str("junk.png"), "not a png");
  CHECK_THROWS_AS(readPng(tmp.str("junk.png")), Error);
}

TEST_CASE("GZFT: empty set, hand-built bytes and trailer") {
  const FeatureFile empty{FeatureSet{Eigen::MatrixXd(0, 0)}, std::nullopt};
  const auto bytes = encodeFeatureFile(empty);
  CHECK(bytes.size() == 16);
  CHECK(bytes == gzftBytes(1, 0, 0, {}));

  auto hand = gzftBytes(1, 2, 3, {1.5f, -2.0f, 0.25f, 3.0f, 0.0f, -0.125f});
  FeatureFile f = decodeFeatureFile(hand);
  CHECK(f.features.count() == 2);
  CHECK(f.features.dim() == 3);
  CHECK(f.features.rows(0, 1) == -2.0);
  CHECK(f.features.rows(1, 2) == -0.125);
  CHECK(!f.header_json);
  CHECK(encodeFeatureFile(f) == hand);

  le32(hand, 7);
  for (char c : std::string("{\"a\":1}")) hand.push_back(static_cast<std::uint8_t>(c));
  f = decodeFeatureFile(hand);
  REQUIRE(f.header_json);
  CHECK(*f.header_json == "{\"a\":1}");
  CHECK(encodeFeatureFile(f) == hand);
}

TEST_CASE("GZFT errors name positions and sizes") {
  std::optional<ParseError> slot;
  const auto good = gzftBytes(1, 2, 2, {1, 2, 3, 4});

  auto truncated = good;
  truncated.resize(good.size() - 3);
  const ParseError* e = expectParse([&] { decodeFeatureFile(truncated, "t.gzft"); }, slot);
  REQUIRE(e);
  CHECK(e->unit() == ParseError::Unit::Byte);
  CHECK(std::string(e->what()).find("expected 16 bytes, got 13") != std::string::npos);

  try {
    decodeFeatureFile(gzftBytes(2, 0, 0, {}));
    FAIL("expected VersionMismatch");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::VersionMismatch);
  }

  e = expectParse([&] { decodeFeatureFile(gzftBytes(1, 1, 3, {1, NAN, 2})); }, slot);
  REQUIRE(e);
  CHECK(e->position() == 20);

  auto bad_magic = good;
  bad_magic[0] = 'X';
  e = expectParse([&] { decodeFeatureFile(bad_magic); }, slot);
  REQUIRE(e);
  CHECK(e->position() == 0);

  auto short_trailer = good;
  short_trailer.push_back(1);
  CHECK(expectParse([&] { decodeFeatureFile(short_trailer); }, slot));
  auto long_trailer = good;
  le32(long_trailer, 10);
  long_trailer.push_back('x');
  CHECK(expectParse([&] { decodeFeatureFile(long_trailer); }, slot));

  FeatureFile inf{FeatureSet{Eigen::MatrixXd::Constant(1, 1, 1e300)}, std::nullopt};
  CHECK_THROWS_AS(encodeFeatureFile(inf), Error);
}

TEST_CASE("GZFT decoding never crashes on corrupted input") {
  Rng rng(84);
  FeatureFile f{FeatureSet{Eigen::MatrixXd::Random(4, 5)}, std::string("{\"x\":[1,2,3]}")};
  const auto good = encodeFeatureFile(f);
  for (int i = 0; i < 5000; ++i) {
    auto b = good;
    if (i % 2 == 0) {
      b.resize(uniformIndex(rng, b.size()));
    } else {
      for (int k = 0; k < 3; ++k) b[uniformIndex(rng, b.size())] = static_cast<std::uint8_t>(rng());
    }
    try {
      decodeFeatureFile(b);
    } catch (const ParseError& e) {
      CHECK(e.position() <= b.size());
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::VersionMismatch);
    }
  }
}

TEST_CASE("feature files on disk") {
  TempDir tmp("gzft");
  const FeatureFile f{FeatureSet{Eigen::MatrixXd::Random(6, 4).cast<float>().cast<double>()}, std::nullopt};
  writeFeatureFile(tmp.str("a.gzft"), f);
  CHECK(readFeatureFile(tmp.str("a.gzft")).features.rows == f.features.rows);
  CHECK_THROWS_AS(readFeatureFile(tmp.str("none.gzft")), Error);
}

TEST_CASE("latent dumps round trip through GZFT") {
  Rng rng(85);
  LatentState s;
  s.id_code = Eigen::VectorXd(7);
  for (Eigen::Index i = 0; i < 7; ++i) s.id_code(i) = static_cast<float>(uniform01(rng));
  for (const std::string name : {"gaze", "head"}) {
    Factor f;
    f.embedding = FactorEmbedding(4, 3);
    for (Eigen::Index i = 0; i < 12; ++i) f.embedding.data()[i] = static_cast<float>(uniform01(rng) - 0.5);
    f.condition = randomDirection(rng);
    s.factors[name] = f;
  }
  const FeatureFile file = encodeLatent(s);
  CHECK(file.features.count() == 8 + 3);
  const LatentState back = decodeLatent(decodeFeatureFile(encodeFeatureFile(file)));
  CHECK(back.id_code == s.id_code);
  for (const auto& [name, f] : s.factors) {
    CHECK(back.factor(name).embedding == f.embedding);
    CHECK(back.factor(name).condition == f.condition);
  }
  FeatureFile no_header = file;
  no_header.header_json.reset();
  CHECK_THROWS_AS(decodeLatent(no_header), Error);
  FeatureFile short_payload = file;
  short_payload.features.rows.conservativeResize(5, 3);
  CHECK_THROWS_AS(decodeLatent(short_payload), Error);
}

TEST_CASE("homographies are 72 little-endian bytes") {
  Eigen::Matrix3d h;
  h << 1, 2, 3, 4, 5, 6, 7, 8, 0.1;
  const auto b = encodeHomography(h);
  REQUIRE(b.size() == 72);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[8 + i]) << (8 * i);
  CHECK(std::bit_cast<double>(bits) == 2.0);
  CHECK(decodeHomography(b) == h);
  CHECK_THROWS_AS(decodeHomography(std::vector<std::uint8_t>(71)), Error);
}

TEST_CASE("formatDouble is exact") {
  Rng rng(86);
  for (int i = 0; i < 1000; ++i) {
    const double v = (uniform01(rng) - 0.5) * std::pow(10.0, static_cast<double>(uniformIndex(rng, 20)) - 10);
    CHECK(std::stod(formatDouble(v)) == v);
  }
}
