#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "gazeaug/camnorm.hpp"
#include "gazeaug/facemesh.hpp"
#include "gazeaug/manifest.hpp"
#include "gazeaug/raster.hpp"

namespace gazeaug {

enum class SamplingMode { HeadBased, GazeBased };
enum class TextureSource { Image, Mesh };

const char* toString(SamplingMode m);
SamplingMode parseSamplingMode(const std::string& s);

struct AugmentConfig {
  SamplingMode mode = SamplingMode::HeadBased;
  double radius_deg = 60;
  int targets_per_source = 10;
  int sources_per_subject = 30;
  int min_subject_samples = 30;
  std::uint64_t seed = 0;
  BackgroundMode background = BackgroundMode::SolidColor;
  std::string background_pool;  // directory of PNGs for ImagePool
  Direction center;             // disk center, radians
  TextureSource texture = TextureSource::Image;

  void validate() const;
};

// Drops subjects with fewer than min_subject_samples rows, then draws
// sources_per_subject rows per remaining subject without replacement.
// Subjects are visited in sorted order; within a subject the returned rows
// keep manifest order.
std::map<std::string, std::vector<std::size_t>> selectSourceRows(
    const std::vector<ManifestEntry>& manifest, int sources_per_subject, int min_subject_samples,
    Rng& rng);

std::map<std::string, std::vector<ManifestEntry>> selectSources(
    const std::vector<ManifestEntry>& manifest, const AugmentConfig& cfg, Rng& rng);

struct AugmentedSample {
  ImageBuffer image;
  Direction head;
  Direction gaze;
  Direction target;
  int target_index = 0;
};

struct TargetFailure {
  int target_index;
  std::string reason;
};

struct AugmentSampleResult {
  std::vector<AugmentedSample> outputs;
  std::vector<TargetFailure> failures;
};

// Stream for target k of a source row; depends only on (seed, subject, image, k).
Rng targetStream(std::uint64_t seed, const ManifestEntry& entry, int target_index);

// `lm` must already sit in normalized camera space with labels that agree
// with the entry within 0.5 degrees (LabelMismatch otherwise).
AugmentSampleResult augmentSample(const ManifestEntry& entry, const LabeledMesh& lm,
                                  const AugmentConfig& cfg, const NormalizationSpec& spec,
                                  const std::vector<ImageBuffer>& pool = {});

struct BackgroundPool {
  std::vector<ImageBuffer> images;
  std::string hash;  // over sorted file names and bytes
};

BackgroundPool loadBackgroundPool(const std::string& dir);

struct FailureRecord {
  std::size_t row;
  std::string reason;
};

struct AugmentReport {
  std::size_t planned = 0;
  std::size_t succeeded = 0;
  std::size_t failed = 0;
  std::vector<FailureRecord> failures;
  std::string background_pool_hash;

  std::string toJson() const;
};

struct AugmentPaths {
  std::string base_dir;    // resolves relative manifest paths
  std::string output_dir;  // receives images/, manifest.jsonl, report.json
};

struct AugmentRun {
  std::vector<ManifestEntry> manifest;
  AugmentReport report;
};

std::string resolvePath(const std::string& base_dir, const std::string& path);

// Loads a model-space mesh for `entry`, places it in normalized space from
// the entry's labels and optionally re-textures it from the source image.
LabeledMesh loadSourceMesh(const ManifestEntry& entry, const std::string& base_dir,
                           const NormalizationSpec& spec, TextureSource texture);

AugmentRun runAugmentation(const std::vector<ManifestEntry>& manifest, const AugmentConfig& cfg,
                           const AugmentPaths& paths, const NormalizationSpec& spec = {},
                           int jobs = 1);

// Runs fn(i) for i in [0, n) on `jobs` threads.
void parallelFor(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace gazeaug
