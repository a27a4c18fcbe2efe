#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gazeaug/camnorm.hpp"
#include "gazeaug/facemesh.hpp"
#include "gazeaug/manifest.hpp"

namespace gazeaug {

// Synthetic dataset for smoke tests and demos: one ellipsoidal face mesh per
// subject with a subject-specific color pattern, rendered in normalized space.
struct ToyOptions {
  int subjects = 2;
  int samples_per_subject = 3;
  double head_radius_deg = 15;   // head labels within this disk around frontal
  double gaze_offset_deg = 10;   // gaze within this disk around the head label
  int rings = 12;
  int segments = 24;
  std::uint64_t seed = 0;
  NormalizationSpec spec;
};

// Front part (polar angle <= 80 degrees) of an ellipsoid with semi-axes
// 45 x 55 x 35 mm, facing -z, face center at the origin.
FaceMesh toyFaceMesh(int subject_index, int rings = 12, int segments = 24);

std::string toySubjectName(int subject_index);

// Writes meshes/, images/ and manifest.jsonl under `dir`; returns the manifest.
std::vector<ManifestEntry> makeToyDataset(const std::string& dir, const ToyOptions& options,
                                          int jobs = 1);

}  // namespace gazeaug
