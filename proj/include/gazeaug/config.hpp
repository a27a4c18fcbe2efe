#pragma once

#include <string>

#include "gazeaug/augment.hpp"
#include "gazeaug/camnorm.hpp"
#include "gazeaug/evalharness.hpp"
#include "gazeaug/metrics.hpp"

namespace gazeaug {

struct PathsConfig {
  std::string manifest;         // input manifest
  std::string base_dir;         // resolves relative manifest paths; empty = manifest's dir
  std::string output_dir;
  std::string background_pool;  // directory of PNGs
};

// Flat key=value text with [camera], [normalization], [augment], [protocol],
// [loss] and [paths] sections. '#' starts a comment. Angles are radians except
// keys ending in _deg. The seed is not part of the file; it comes from --seed.
struct RunConfig {
  CameraIntrinsics camera;
  NormalizationSpec normalization;
  AugmentConfig augment;
  ProtocolConfig protocol;
  LossWeights loss;
  int embedding_rows = 16;
  double bin_width_deg = 10;
  PathsConfig paths;

  void validate() const;
};

// Unknown sections or keys and malformed values raise ParseError with the
// 1-based line number.
RunConfig parseRunConfig(const std::string& text, const std::string& source = "<string>");
RunConfig readRunConfig(const std::string& path);
std::string runConfigText(const RunConfig& cfg);
void writeRunConfig(const std::string& path, const RunConfig& cfg);

}  // namespace gazeaug
