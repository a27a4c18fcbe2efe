#include "gazeaug/augment.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <mutex>
#include <thread>

#include "gazeaug/io.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace gazeaug {

const char* toString(SamplingMode m) {
  return m == SamplingMode::HeadBased ? "head" : "gaze";
}

SamplingMode parseSamplingMode(const std::string& s) {
  if (s == "head" || s == "head-based") return SamplingMode::HeadBased;
  if (s == "gaze" || s == "gaze-based") return SamplingMode::GazeBased;
  throw Error(ErrorCode::InvalidArgument, "unknown sampling mode '" + s + "'");
}

void AugmentConfig::validate() const {
  if (!(radius_deg > 0 && radius_deg <= 90))
    throw Error(ErrorCode::InvalidArgument, "radius must lie in (0, 90] degrees");
  if (targets_per_source < 1 || sources_per_subject < 1 || min_subject_samples < 1)
    throw Error(ErrorCode::InvalidArgument, "augmentation counts must be >= 1");
  if (background == BackgroundMode::ImagePool && background_pool.empty())
    throw Error(ErrorCode::EmptyPool, "image-pool background needs a pool directory");
}

std::map<std::string, std::vector<std::size_t>> selectSourceRows(
    const std::vector<ManifestEntry>& manifest, int sources_per_subject, int min_subject_samples,
    Rng& rng) {
  if (manifest.empty()) throw Error(ErrorCode::InvalidArgument, "manifest is empty");
  std::map<std::string, std::vector<std::size_t>> by_subject;
  for (std::size_t i = 0; i < manifest.size(); ++i) by_subject[manifest[i].subject].push_back(i);

  std::map<std::string, std::vector<std::size_t>> selected;
  for (auto& [subject, rows] : by_subject) {
    if (static_cast<int>(rows.size()) < min_subject_samples) continue;
    const std::size_t k = std::min(rows.size(), static_cast<std::size_t>(sources_per_subject));
    // Partial Fisher-Yates.
    for (std::size_t i = 0; i < k; ++i) std::swap(rows[i], rows[i + uniformIndex(rng, rows.size() - i)]);
    std::vector<std::size_t> chosen(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(chosen.begin(), chosen.end());
    selected.emplace(subject, std::move(chosen));
  }
  if (selected.empty())
    throw Error(ErrorCode::EmptyAfterFilter, "no subject has at least " +
                                                 std::to_string(min_subject_samples) + " samples");
  return selected;
}

std::map<std::string, std::vector<ManifestEntry>> selectSources(
    const std::vector<ManifestEntry>& manifest, const AugmentConfig& cfg, Rng& rng) {
  std::map<std::string, std::vector<ManifestEntry>> out;
  for (const auto& [subject, rows] :
       selectSourceRows(manifest, cfg.sources_per_subject, cfg.min_subject_samples, rng)) {
    auto& v = out[subject];
    for (std::size_t r : rows) v.push_back(manifest[r]);
  }
  return out;
}

Rng targetStream(std::uint64_t seed, const ManifestEntry& entry, int target_index) {
  return StreamKey(seed)
      .add("augment-target")
      .add(entry.subject)
      .add(entry.image)
      .add(static_cast<std::uint64_t>(target_index))
      .rng();
}

AugmentSampleResult augmentSample(const ManifestEntry& entry, const LabeledMesh& lm,
                                  const AugmentConfig& cfg, const NormalizationSpec& spec,
                                  const std::vector<ImageBuffer>& pool) {
  const Direction src_head = headDirection(lm.head.rotation);
  const Direction src_gaze = vectorToDirection<double>(lm.gaze);
  constexpr double tolerance = deg2rad(0.5);
  if (angularError(src_head, entry.head) > tolerance || angularError(src_gaze, entry.gaze) > tolerance)
    throw Error(ErrorCode::LabelMismatch, "mesh labels disagree with manifest row for '" + entry.image + "'");

  const double radius = deg2rad(cfg.radius_deg);
  const CameraIntrinsics intrinsics = spec.intrinsics();
  AugmentSampleResult result;
  for (int k = 0; k < cfg.targets_per_source; ++k) {
    Rng rng = targetStream(cfg.seed, entry, k);
    const Direction target = sampleDiskDirection(cfg.center, radius, rng);
    const Rotation3d r = cfg.mode == SamplingMode::HeadBased ? headTargetRotation(src_head, target)
                                                             : gazeTargetRotation(src_gaze, target);
    const LabeledMesh rotated = rotateAboutCenter(lm, r);
    try {
      const ImageBuffer bg = randomBackground(rng, cfg.background, pool, spec.out_width, spec.out_height);
      RenderReport report;
      ImageBuffer img = rasterize(rotated.mesh, intrinsics, bg, &report);
      if (report.triangles_skipped_behind_camera > 0)
        throw Error(ErrorCode::RenderFailure, std::to_string(report.triangles_skipped_behind_camera) +
                                                  " triangles behind camera");
      result.outputs.push_back({std::move(img), headDirection(rotated.head.rotation),
                                vectorToDirection<double>(rotated.gaze), target, k});
    } catch (const Error& e) {
      result.failures.push_back({k, e.what()});
    }
  }
  return result;
}

BackgroundPool loadBackgroundPool(const std::string& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::Io, "background pool '" + dir + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  BackgroundPool pool;
  StreamKey key(0);
  for (const auto& f : files) {
    key.add(f.filename().string());
    const auto bytes = readBytes(f.string());
    key.add(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    pool.images.push_back(readPng(f.string()));
  }
  if (pool.images.empty()) throw Error(ErrorCode::EmptyPool, "no PNG files in '" + dir + "'");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(key.value()));
  pool.hash = buf;
  return pool;
}

std::string AugmentReport::toJson() const {
  nlohmann::ordered_json j;
  j["planned"] = planned;
  j["succeeded"] = succeeded;
  j["failed"] = failed;
  j["failures"] = nlohmann::ordered_json::array();
  for (const auto& f : failures) j["failures"].push_back({{"row", f.row}, {"reason", f.reason}});
  if (!background_pool_hash.empty()) j["background_pool"] = background_pool_hash;
  return j.dump(2) + "\n";
}

std::string resolvePath(const std::string& base_dir, const std::string& path) {
  const fs::path p(path);
  if (p.is_absolute() || base_dir.empty()) return p.string();
  return (fs::path(base_dir) / p).string();
}

LabeledMesh loadSourceMesh(const ManifestEntry& entry, const std::string& base_dir,
                           const NormalizationSpec& spec, TextureSource texture) {
  const FaceMesh model = readMesh(resolvePath(base_dir, entry.mesh));
  model.validate();
  LabeledMesh lm = placeLabeledMesh(model, entry.head, entry.gaze, spec.distance_norm);
  if (texture == TextureSource::Image) {
    const ImageBuffer src = readPng(resolvePath(base_dir, entry.image));
    if (src.width() != spec.out_width || src.height() != spec.out_height)
      throw Error(ErrorCode::DimensionMismatch,
                  "source image '" + entry.image + "' is not at the normalized resolution");
    lm.mesh = textureFromImage(lm.mesh, src, spec.intrinsics());
  }
  return lm;
}

void parallelFor(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(jobs, 1), std::max<std::size_t>(n, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) fn(i);
    });
  for (auto& t : pool) t.join();
}

namespace {

std::string safeName(const std::string& s) {
  std::string out = s;
  for (char& c : out)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
  return out.empty() ? "_" : out;
}

struct SourceOutcome {
  std::vector<ManifestEntry> rows;
  std::vector<FailureRecord> failures;
};

}  // namespace

AugmentRun runAugmentation(const std::vector<ManifestEntry>& manifest, const AugmentConfig& cfg,
                           const AugmentPaths& paths, const NormalizationSpec& spec, int jobs) {
  cfg.validate();
  spec.validate();
  Rng select_rng = StreamKey(cfg.seed).add("select-sources").rng();
  const auto selected =
      selectSourceRows(manifest, cfg.sources_per_subject, cfg.min_subject_samples, select_rng);
  std::vector<std::size_t> sources;
  for (const auto& [subject, rows] : selected) sources.insert(sources.end(), rows.begin(), rows.end());

  AugmentRun run;
  BackgroundPool pool;
  if (cfg.background == BackgroundMode::ImagePool) {
    pool = loadBackgroundPool(cfg.background_pool);
    run.report.background_pool_hash = pool.hash;
  }

  const fs::path out_dir(paths.output_dir);
  fs::create_directories(out_dir / "images");

  std::vector<SourceOutcome> outcomes(sources.size());
  parallelFor(sources.size(), jobs, [&](std::size_t s) {
    const std::size_t row = sources[s];
    const ManifestEntry& entry = manifest[row];
    SourceOutcome& out = outcomes[s];
    try {
      const LabeledMesh lm = loadSourceMesh(entry, paths.base_dir, spec, cfg.texture);
      AugmentSampleResult res = augmentSample(entry, lm, cfg, spec, pool.images);
      const fs::path subject_dir = fs::path("images") / safeName(entry.subject);
      fs::create_directories(out_dir / subject_dir);
      for (const auto& sample : res.outputs) {
        const fs::path rel =
            subject_dir / ("r" + std::to_string(row) + "_t" + std::to_string(sample.target_index) + ".png");
        try {
          writePng((out_dir / rel).string(), sample.image);
        } catch (const Error& e) {
          out.failures.push_back({row, "target " + std::to_string(sample.target_index) + ": " + e.what()});
          continue;
        }
        ManifestEntry o = entry;
        o.image = rel.generic_string();
        o.head = sample.head;
        o.gaze = sample.gaze;
        out.rows.push_back(std::move(o));
      }
      for (const auto& f : res.failures)
        out.failures.push_back({row, "target " + std::to_string(f.target_index) + ": " + f.reason});
    } catch (const std::exception& e) {
      for (int k = 0; k < cfg.targets_per_source; ++k)
        out.failures.push_back({row, "target " + std::to_string(k) + ": " + e.what()});
    }
  });

  run.report.planned = sources.size() * static_cast<std::size_t>(cfg.targets_per_source);
  for (auto& o : outcomes) {
    run.manifest.insert(run.manifest.end(), o.rows.begin(), o.rows.end());
    run.report.failures.insert(run.report.failures.end(), o.failures.begin(), o.failures.end());
  }
  run.report.succeeded = run.manifest.size();
  run.report.failed = run.report.failures.size();

  writeManifest((out_dir / "manifest.jsonl").string(), run.manifest);
  writeText((out_dir / "report.json").string(), run.report.toJson());
  return run;
}

}  // namespace gazeaug
