#include <filesystem>
#include <set>

#include "doctest.h"
#include "gazeaug/augment.hpp"
#include "gazeaug/io.hpp"
#include "gazeaug/toy.hpp"
#include "json.hpp"
#include "support.hpp"

using namespace gazeaug;
using gazeaug::testing::TempDir;
namespace fs = std::filesystem;

namespace {

std::vector<ManifestEntry> syntheticManifest(const std::vector<std::pair<std::string, int>>& counts) {
  std::vector<ManifestEntry> rows;
  for (const auto& [subject, n] : counts)
    for (int i = 0; i < n; ++i) rows.push_back({subject, subject + "/" + std::to_string(i) + ".png", "", {}, {}, ""});
  return rows;
}

std::map<std::string, std::string> readTree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files[fs::relative(e.path(), root).generic_string()] = readText(e.path().string());
  return files;
}

}  // namespace

TEST_CASE("source selection filters small subjects and draws without replacement") {
  const auto rows = syntheticManifest({{"b", 40}, {"a", 12}, {"c", 5}});
  Rng rng(41);
  const auto sel = selectSourceRows(rows, 10, 6, rng);
  REQUIRE(sel.size() == 2);
  CHECK(sel.count("c") == 0);
  for (const auto& [subject, picked] : sel) {
    CHECK(picked.size() == 10);
    CHECK(std::is_sorted(picked.begin(), picked.end()));
    CHECK(std::set<std::size_t>(picked.begin(), picked.end()).size() == picked.size());
    for (std::size_t r : picked) CHECK(rows[r].subject == subject);
  }
  Rng again(41);
  CHECK(selectSourceRows(rows, 10, 6, again) == sel);
}

TEST_CASE("subjects with fewer rows than requested sources contribute all rows") {
  const auto rows = syntheticManifest({{"a", 4}});
  Rng rng(42);
  const auto sel = selectSourceRows(rows, 30, 1, rng);
  CHECK(sel.at("a") == std::vector<std::size_t>{0, 1, 2, 3});
}

TEST_CASE("source selection errors") {
  Rng rng(43);
  CHECK_THROWS_AS(selectSourceRows({}, 3, 1, rng), Error);
  try {
    selectSourceRows(syntheticManifest({{"a", 3}}), 3, 30, rng);
    FAIL("expected EmptyAfterFilter");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyAfterFilter);
  }
}

TEST_CASE("each source yields targets_per_source images with exact labels") {
  const NormalizationSpec spec;
  const FaceMesh model = toyFaceMesh(0);
  const Direction head{0.05, -0.1}, gaze{0.12, 0.02};
  const ManifestEntry entry{"s", "x.png", "m.mesh", head, gaze, ""};
  const LabeledMesh lm = placeLabeledMesh(model, head, gaze, spec.distance_norm);

  for (SamplingMode mode : {SamplingMode::HeadBased, SamplingMode::GazeBased}) {
    AugmentConfig cfg;
    cfg.mode = mode;
    cfg.seed = 5;
    const auto res = augmentSample(entry, lm, cfg, spec);
    CHECK(res.failures.empty());
    REQUIRE(res.outputs.size() == 10);
    for (const auto& out : res.outputs) {
      CHECK(out.image.width() == 128);
      CHECK(std::hypot(out.target.pitch, out.target.yaw) <= deg2rad(60.0) + 1e-12);
      const Direction& moved = mode == SamplingMode::HeadBased ? out.head : out.gaze;
      CHECK(angularError(moved, out.target) < 1e-9);
      // The other label rotates rigidly with the face.
      const Rotation3d r = mode == SamplingMode::HeadBased ? rotationBetween(head, out.target)
                                                           : rotationBetween(gaze, out.target);
      const Direction other = mode == SamplingMode::HeadBased ? out.gaze : out.head;
      const Vector3d expected = r * directionToVector(mode == SamplingMode::HeadBased ? gaze : head);
      CHECK(angularError(directionToVector(other), expected) < 1e-9);
    }
  }
}

TEST_CASE("augmentSample rejects meshes whose labels disagree with the manifest") {
  const NormalizationSpec spec;
  const LabeledMesh lm = placeLabeledMesh(toyFaceMesh(1), Direction{}, Direction{}, spec.distance_norm);
  const ManifestEntry entry{"s", "x.png", "m.mesh", Direction{0.2, 0}, Direction{}, ""};
  try {
    augmentSample(entry, lm, AugmentConfig{}, spec);
    FAIL("expected LabelMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LabelMismatch);
  }
}

TEST_CASE("target streams depend only on seed, sample identity and index") {
  const ManifestEntry a{"s1", "a.png", "", {}, {}, ""};
  const ManifestEntry b{"s1", "b.png", "", {}, {}, ""};
  CHECK(targetStream(1, a, 0)() == targetStream(1, a, 0)());
  CHECK(targetStream(1, a, 0)() != targetStream(1, a, 1)());
  CHECK(targetStream(1, a, 0)() != targetStream(1, b, 0)());
  CHECK(targetStream(1, a, 0)() != targetStream(2, a, 0)());
}

TEST_CASE("toy run: 2 subjects x 3 sources x 2 targets gives 12 outputs") {
  TempDir tmp("aug");
  ToyOptions toy;
  toy.subjects = 2;
  toy.samples_per_subject = 3;
  const auto manifest = makeToyDataset(tmp.str("toy"), toy);
  AugmentConfig cfg;
  cfg.sources_per_subject = 3;
  cfg.min_subject_samples = 3;
  cfg.targets_per_source = 2;
  cfg.seed = 9;
  const AugmentRun run = runAugmentation(manifest, cfg, {tmp.str("toy"), tmp.str("out")});
  CHECK(run.report.planned == 12);
  CHECK(run.report.succeeded == 12);
  CHECK(run.report.failed == 0);
  CHECK(run.manifest.size() == 12);
  CHECK(readManifest(tmp.str("out/manifest.jsonl")) == run.manifest);
  for (const auto& e : run.manifest) {
    CHECK(fs::exists(tmp.path() / "out" / e.image));
    CHECK(std::hypot(e.head.pitch, e.head.yaw) <= deg2rad(60.0) + 1e-12);
  }
  const auto report = nlohmann::json::parse(readText(tmp.str("out/report.json")));
  CHECK(report["planned"] == 12);
  CHECK(report["succeeded"] == 12);
}

TEST_CASE("augmentation output does not depend on the worker count") {
  TempDir tmp("augjobs");
  ToyOptions toy;
  toy.subjects = 3;
  toy.samples_per_subject = 4;
  const auto manifest = makeToyDataset(tmp.str("toy"), toy);
  AugmentConfig cfg;
  cfg.sources_per_subject = 3;
  cfg.min_subject_samples = 2;
  cfg.targets_per_source = 3;
  cfg.seed = 77;
  runAugmentation(manifest, cfg, {tmp.str("toy"), tmp.str("one")}, {}, 1);
  runAugmentation(manifest, cfg, {tmp.str("toy"), tmp.str("many")}, {}, 8);
  CHECK(readTree(tmp.path() / "one") == readTree(tmp.path() / "many"));
  cfg.seed = 78;
  runAugmentation(manifest, cfg, {tmp.str("toy"), tmp.str("other")}, {}, 1);
  CHECK(readTree(tmp.path() / "one") != readTree(tmp.path() / "other"));
}

TEST_CASE("a source that cannot be loaded fails all its targets and the run continues") {
  TempDir tmp("augfail");
  ToyOptions toy;
  toy.subjects = 1;
  toy.samples_per_subject = 3;
  auto manifest = makeToyDataset(tmp.str("toy"), toy);
  manifest[1].mesh = "meshes/missing.mesh";
  AugmentConfig cfg;
  cfg.sources_per_subject = 3;
  cfg.min_subject_samples = 1;
  cfg.targets_per_source = 4;
  const AugmentRun run = runAugmentation(manifest, cfg, {tmp.str("toy"), tmp.str("out")});
  CHECK(run.report.planned == 12);
  CHECK(run.report.succeeded == 8);
  CHECK(run.report.failed == 4);
  for (const auto& f : run.report.failures) CHECK(f.row == 1);
}

TEST_CASE("image-pool backgrounds and the pool hash") {
  TempDir tmp("pool");
  fs::create_directories(tmp.path() / "pool");
  writePng(tmp.str("pool/a.png"), ImageBuffer(8, 8, Rgb(1, 0, 0)));
  writePng(tmp.str("pool/b.png"), ImageBuffer(4, 6, Rgb(0, 0, 1)));
  const BackgroundPool p1 = loadBackgroundPool(tmp.str("pool"));
  const BackgroundPool p2 = loadBackgroundPool(tmp.str("pool"));
  CHECK(p1.images.size() == 2);
  CHECK(p1.hash.size() == 16);
  CHECK(p1.hash == p2.hash);
  writePng(tmp.str("pool/b.png"), ImageBuffer(4, 6, Rgb(0, 1, 1)));
  CHECK(loadBackgroundPool(tmp.str("pool")).hash != p1.hash);

  fs::create_directories(tmp.path() / "empty");
  CHECK_THROWS_AS(loadBackgroundPool(tmp.str("empty")), Error);

  ToyOptions toy;
  toy.subjects = 1;
  toy.samples_per_subject = 2;
  const auto manifest = makeToyDataset(tmp.str("toy"), toy);
  AugmentConfig cfg;
  cfg.min_subject_samples = 1;
  cfg.targets_per_source = 2;
  cfg.background = BackgroundMode::ImagePool;
  cfg.background_pool = tmp.str("pool");
  const AugmentRun run = runAugmentation(manifest, cfg, {tmp.str("toy"), tmp.str("out")});
  CHECK(run.report.succeeded == 4);
  CHECK(run.report.background_pool_hash == loadBackgroundPool(tmp.str("pool")).hash);
  // Corner pixels come from a pool image.
  const ImageBuffer img = readPng((tmp.path() / "out" / run.manifest[0].image).string());
  const Rgb corner = img.pixel(0, 0);
  CHECK((corner == Rgb(1, 0, 0) || corner == Rgb(0, 1, 1)));
}

TEST_CASE("augment config validation") {
  AugmentConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.radius_deg = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.targets_per_source = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.background = BackgroundMode::ImagePool;
  CHECK_THROWS_AS(cfg.validate(), Error);
  CHECK((parseSamplingMode("gaze") == SamplingMode::GazeBased));
  CHECK_THROWS_AS(parseSamplingMode("eyes"), Error);
}
