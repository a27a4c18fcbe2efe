#pragma once

#include <string>

#include "gazeaug/geometry.hpp"

namespace gazeaug {

// One labeled sample of a dataset manifest.
struct ManifestEntry {
  std::string subject;
  std::string image;
  std::string mesh;
  Direction head;
  Direction gaze;
  std::string camera;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

}  // namespace gazeaug
