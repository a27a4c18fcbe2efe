#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "gazeaug/augment.hpp"
#include "gazeaug/evalharness.hpp"
#include "gazeaug/io.hpp"
#include "gazeaug/toy.hpp"
#include "json.hpp"
#include "support.hpp"

using namespace gazeaug;
using gazeaug::testing::TempDir;

namespace {

struct Toy {
  TempDir dir{"eval"};
  std::vector<ManifestEntry> manifest;
  NormalizationSpec spec;

  explicit Toy(int subjects = 2, int samples = 4) {
    ToyOptions o;
    o.subjects = subjects;
    o.samples_per_subject = samples;
    o.seed = 3;
    manifest = makeToyDataset(dir.str(), o);
  }

  MeshRedirector meshRedirector() const {
    const std::string base = dir.str();
    const NormalizationSpec s = spec;
    return MeshRedirector([base, s](const ManifestEntry& e) {
      return loadSourceMesh(e, base, s, TextureSource::Mesh);
    }, spec);
  }
};

long double angleDeg(const Direction& a, const Direction& b) {
  const Vector3d u = directionToVector(a), v = directionToVector(b);
  const long double c = static_cast<long double>(u.x()) * v.x() + static_cast<long double>(u.y()) * v.y() +
                        static_cast<long double>(u.z()) * v.z();
  return std::acos(std::clamp(c, -1.0L, 1.0L)) * 180.0L / 3.14159265358979323846264338327950288L;
}

std::vector<std::vector<std::string>> parseCsv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("mesh redirector with the oracle estimator closes for every pattern") {
  const Toy toy;
  const MeshRedirector red = toy.meshRedirector();
  for (RedirectPattern p : {RedirectPattern::Both, RedirectPattern::GazeOnly, RedirectPattern::HeadOnly}) {
    ProtocolConfig cfg;
    cfg.pattern = p;
    cfg.targets_per_source = 3;
    cfg.seed = 11;
    const EvalRun run = redirectToAngle(toy.manifest, red, OracleEstimator(), pngLoader(toy.dir.str()), cfg);
    CHECK(run.failures.empty());
    REQUIRE(run.records.size() == 2 * 4 * 3);
    for (const auto& r : run.records) {
      CHECK(r.head_error_deg < 1e-6);
      CHECK(r.gaze_error_deg < 1e-6);
    }
    const ReportBundle b = report(run);
    CHECK(b.summary.mean_head_error_deg < 1e-6);
    CHECK(b.summary.mean_gaze_error_deg < 1e-6);
  }
}

TEST_CASE("identity redirector: head error equals the target-to-source angle") {
  const Toy toy;
  ProtocolConfig cfg;
  cfg.targets_per_source = 5;
  cfg.sources_per_subject = 2;
  cfg.seed = 21;
  const EvalRun run = redirectToAngle(toy.manifest, IdentityRedirector(), OracleEstimator(),
                                      pngLoader(toy.dir.str()), cfg);
  REQUIRE(run.records.size() == 2 * 2 * 5);
  long double expected_sum = 0;
  for (const auto& r : run.records) {
    const auto it = std::find_if(toy.manifest.begin(), toy.manifest.end(),
                                 [&](const ManifestEntry& e) { return e.image == r.source_image; });
    REQUIRE(it != toy.manifest.end());
    Rng rng = StreamKey(21).add("eval-target").add(it->subject).add(it->image)
                  .add(static_cast<std::uint64_t>(r.target_index)).rng();
    const Direction t = sampleDiskDirection(Direction{}, deg2rad(60.0), rng);
    const long double want = angleDeg(t, it->head);
    CHECK(std::abs(r.head_error_deg - static_cast<double>(want)) < 1e-9);
    expected_sum += want;
  }
  const ReportBundle b = report(run);
  CHECK(std::abs(b.summary.mean_head_error_deg - static_cast<double>(expected_sum / run.records.size())) < 1e-9);
}

TEST_CASE("record count is subjects x sources x targets minus failures") {
  const Toy toy(3, 5);
  auto manifest = toy.manifest;
  const MeshRedirector red = toy.meshRedirector();
  ProtocolConfig cfg;
  cfg.targets_per_source = 2;
  cfg.sources_per_subject = 4;
  auto run = redirectToAngle(manifest, red, OracleEstimator(), pngLoader(toy.dir.str()), cfg);
  CHECK(run.records.size() == 3 * 4 * 2);
  // An unreadable image fails its targets only if it was selected.
  for (auto& e : manifest) e.image = "missing/" + e.image;
  run = redirectToAngle(manifest, red, OracleEstimator(), pngLoader(toy.dir.str()), cfg);
  CHECK(run.records.empty());
  CHECK(run.failures.size() == 3 * 4 * 2);
  CHECK_THROWS_AS(report(run), Error);
}

TEST_CASE("redirect-to-image: target equal to source gives zero error and MS-SSIM 1") {
  const Toy toy;
  std::vector<std::pair<ManifestEntry, ManifestEntry>> pairs;
  for (const auto& e : toy.manifest) pairs.emplace_back(e, e);
  const MeshRedirector red = toy.meshRedirector();
  std::vector<std::size_t> seen;
  std::mutex mu;
  const EvalRun run = redirectToImage(pairs, red, OracleEstimator(), pngLoader(toy.dir.str()),
                                      std::nullopt, ProtocolConfig{}, 1,
                                      [&](std::size_t i, const LabeledImage&) {
                                        std::lock_guard lock(mu);
                                        seen.push_back(i);
                                      });
  REQUIRE(run.records.size() == pairs.size());
  CHECK(seen.size() == pairs.size());
  for (const auto& r : run.records) {
    CHECK(r.head_error_deg < 1e-6);
    CHECK(r.gaze_error_deg < 1e-6);
    CHECK(std::abs(r.metrics.at("ms_ssim") - 1) < 1e-9);
    CHECK(r.metrics.at("l1") == 0);
    CHECK(r.metrics.at("mixed_rec") < 1e-9);
    CHECK(r.metrics.count("identity_similarity") == 0);
  }
  CHECK(!run.fid);
  CHECK(!run.warnings.empty());
}

TEST_CASE("redirect-to-image FID is the metrics FID of the supplied features") {
  const Toy toy;
  std::vector<std::pair<ManifestEntry, ManifestEntry>> pairs;
  for (std::size_t i = 0; i + 1 < toy.manifest.size(); ++i) pairs.emplace_back(toy.manifest[i], toy.manifest[i + 1]);
  Rng rng(31);
  const auto n = static_cast<Eigen::Index>(pairs.size());
  PairFeatures f{FeatureSet{Eigen::MatrixXd(n, 4)}, FeatureSet{Eigen::MatrixXd(n, 4)}};
  for (Eigen::Index i = 0; i < f.generated.rows.size(); ++i) {
    f.generated.rows.data()[i] = uniform01(rng) + 0.1;
    f.target.rows.data()[i] = uniform01(rng) + 0.1;
  }
  const EvalRun run = redirectToImage(pairs, IdentityRedirector(), OracleEstimator(),
                                      pngLoader(toy.dir.str()), f, ProtocolConfig{});
  REQUIRE(run.fid);
  CHECK(*run.fid == fid(f.generated, f.target));
  CHECK(run.warnings.empty());
  for (const auto& r : run.records) {
    const auto i = static_cast<Eigen::Index>(
        std::find_if(pairs.begin(), pairs.end(), [&](const auto& p) { return p.first.image == r.source_image; }) -
        pairs.begin());
    CHECK(r.metrics.at("identity_similarity") ==
          identitySimilarity(f.generated.rows.row(i).transpose(), f.target.rows.row(i).transpose()));
  }
  PairFeatures bad = f;
  bad.target.rows.conservativeResize(n - 1, 4);
  CHECK_THROWS_AS(redirectToImage(pairs, IdentityRedirector(), OracleEstimator(), pngLoader(toy.dir.str()), bad,
                                  ProtocolConfig{}),
                  Error);
}

TEST_CASE("report bins and CSV files are consistent with the records") {
  const Toy toy(2, 6);
  ProtocolConfig cfg;
  cfg.targets_per_source = 6;
  cfg.seed = 41;
  const EvalRun run = redirectToAngle(toy.manifest, IdentityRedirector(), OracleEstimator(),
                                      pngLoader(toy.dir.str()), cfg);
  const ReportBundle b = report(run, 15);
  std::size_t total = 0;
  for (const auto& bin : b.summary.bins) {
    total += bin.count;
    CHECK(bin.count > 0);
    CHECK(std::fmod(bin.start_deg, 15.0) == 0);
  }
  CHECK(total == run.records.size());

  const auto rows = parseCsv(b.records_csv);
  REQUIRE(rows.size() == run.records.size() + 1);
  const auto& header = rows[0];
  const auto col = [&](const std::string& name) {
    return static_cast<std::size_t>(std::find(header.begin(), header.end(), name) - header.begin());
  };
  double head_sum = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) head_sum += std::stod(rows[i][col("head_error_deg")]);
  CHECK(std::abs(head_sum / run.records.size() - b.summary.mean_head_error_deg) < 1e-9);
  CHECK(parseCsv(b.bins_csv).size() == b.summary.bins.size() + 1);

  const ReportSummary back = parseSummaryJson(b.summary_json);
  CHECK(back.records == b.summary.records);
  CHECK(back.mean_head_error_deg == b.summary.mean_head_error_deg);
  CHECK(back.bins.size() == b.summary.bins.size());
}

TEST_CASE("report diff is treatment minus baseline") {
  ReportSummary base, treat;
  base.records = 10;
  treat.records = 10;
  base.mean_head_error_deg = 20;
  treat.mean_head_error_deg = 8;
  base.mean_gaze_error_deg = 5;
  treat.mean_gaze_error_deg = 6;
  base.bins = {{0, 4, 10, 2}, {10, 6, 30, 8}};
  treat.bins = {{0, 4, 5, 3}};
  const auto j = nlohmann::json::parse(diffSummaries(base, treat));
  CHECK(j["head_error_delta_deg"].get<double>() == -12);
  CHECK(j["gaze_error_delta_deg"].get<double>() == 1);
  REQUIRE(j["bins"].size() == 1);
  CHECK(j["bins"][0]["head_error_delta_deg"].get<double>() == -5);
  treat.bin_width_deg = 5;
  CHECK_THROWS_AS(diffSummaries(base, treat), Error);
}

TEST_CASE("evaluation is identical across worker counts") {
  const Toy toy(2, 5);
  const MeshRedirector red = toy.meshRedirector();
  ProtocolConfig cfg;
  cfg.targets_per_source = 3;
  cfg.seed = 51;
  const auto one = report(redirectToAngle(toy.manifest, red, OracleEstimator(), pngLoader(toy.dir.str()), cfg, 1));
  const auto many = report(redirectToAngle(toy.manifest, red, OracleEstimator(), pngLoader(toy.dir.str()), cfg, 8));
  CHECK(one.summary_json == many.summary_json);
  CHECK(one.records_csv == many.records_csv);
  CHECK(one.bins_csv == many.bins_csv);
}

TEST_CASE("protocol config validation") {
  ProtocolConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.radius_deg = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.alpha = 2;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.targets_per_source = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}
