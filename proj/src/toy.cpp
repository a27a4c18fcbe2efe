#include "gazeaug/toy.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>

#include "gazeaug/augment.hpp"
#include "gazeaug/io.hpp"
#include "gazeaug/raster.hpp"

namespace fs = std::filesystem;

namespace gazeaug {

std::string toySubjectName(int subject_index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "s%02d", subject_index);
  return buf;
}

FaceMesh toyFaceMesh(int subject_index, int rings, int segments) {
  if (rings < 2 || segments < 3) throw Error(ErrorCode::InvalidArgument, "toy mesh too coarse");
  constexpr double a = 45, b = 55, c = 35;
  constexpr double max_polar = 80 * std::numbers::pi / 180;

  Rng rng = StreamKey(0).add("toy-mesh").add(static_cast<std::uint64_t>(subject_index)).rng();
  const Rgb skin(0.45 + 0.4 * uniform01(rng), 0.35 + 0.3 * uniform01(rng), 0.25 + 0.3 * uniform01(rng));
  const Rgb accent(uniform01(rng), uniform01(rng), uniform01(rng));
  const int stripes = 2 + static_cast<int>(uniformIndex(rng, 4));

  const Eigen::Index n = 1 + static_cast<Eigen::Index>(rings) * segments;
  FaceMesh m;
  m.vertices.resize(n, 3);
  m.colors.resize(n, 3);
  auto color = [&](double x, double y, double polar, double azimuth) -> Rgb {
    // Dark eye patches, a mouth bar and subject-specific stripes.
    if (std::hypot(x - 17, y + 12) < 7 || std::hypot(x + 17, y + 12) < 7) return Rgb(0.1, 0.08, 0.08);
    if (std::abs(x) < 14 && std::abs(y - 24) < 3) return Rgb(0.6, 0.15, 0.15);
    const double t = 0.5 + 0.5 * std::sin(stripes * azimuth + 6 * polar);
    return (1 - 0.35 * t) * skin + 0.35 * t * accent;
  };
  m.vertices.row(0) << 0, 0, -c;
  m.colors.row(0) = color(0, 0, 0, 0).transpose();
  for (int r = 0; r < rings; ++r) {
    const double polar = max_polar * (r + 1) / rings;
    for (int s = 0; s < segments; ++s) {
      const double az = 2 * std::numbers::pi * s / segments;
      const double x = a * std::sin(polar) * std::cos(az);
      const double y = b * std::sin(polar) * std::sin(az);
      const double z = -c * std::cos(polar);
      const Eigen::Index i = 1 + static_cast<Eigen::Index>(r) * segments + s;
      m.vertices.row(i) << x, y, z;
      m.colors.row(i) = color(x, y, polar, az).transpose();
    }
  }

  std::vector<Eigen::Vector3i> tris;
  for (int s = 0; s < segments; ++s) tris.emplace_back(0, 1 + s, 1 + (s + 1) % segments);
  for (int r = 0; r + 1 < rings; ++r)
    for (int s = 0; s < segments; ++s) {
      const int i0 = 1 + r * segments + s;
      const int i1 = 1 + r * segments + (s + 1) % segments;
      const int j0 = i0 + segments;
      const int j1 = i1 + segments;
      tris.emplace_back(i0, j0, j1);
      tris.emplace_back(i0, j1, i1);
    }
  m.triangles.resize(static_cast<Eigen::Index>(tris.size()), 3);
  for (std::size_t t = 0; t < tris.size(); ++t) m.triangles.row(static_cast<Eigen::Index>(t)) = tris[t].transpose();

  // Landmarks: tip plus four points on the middle ring.
  m.landmarks = {0};
  const int mid = rings / 2;
  for (int q = 0; q < 4; ++q) m.landmarks.push_back(1 + mid * segments + q * segments / 4);
  m.face_center = Vector3d::Zero();
  return m;
}

std::vector<ManifestEntry> makeToyDataset(const std::string& dir, const ToyOptions& options,
                                          int jobs) {
  if (options.subjects < 1 || options.samples_per_subject < 1)
    throw Error(ErrorCode::InvalidArgument, "toy dataset counts must be >= 1");
  options.spec.validate();
  const fs::path root(dir);
  fs::create_directories(root / "meshes");

  std::vector<FaceMesh> meshes;
  for (int s = 0; s < options.subjects; ++s) {
    meshes.push_back(toyFaceMesh(s, options.rings, options.segments));
    writeMesh((root / "meshes" / (toySubjectName(s) + ".mesh")).string(), meshes.back());
    fs::create_directories(root / "images" / toySubjectName(s));
  }

  const std::size_t total = static_cast<std::size_t>(options.subjects) * options.samples_per_subject;
  std::vector<ManifestEntry> rows(total);
  const CameraIntrinsics intrinsics = options.spec.intrinsics();
  parallelFor(total, jobs, [&](std::size_t i) {
    const int s = static_cast<int>(i) / options.samples_per_subject;
    const int k = static_cast<int>(i) % options.samples_per_subject;
    Rng rng = StreamKey(options.seed).add("toy-sample").add(static_cast<std::uint64_t>(i)).rng();
    const Direction head = sampleDiskDirection(Direction{}, deg2rad(options.head_radius_deg), rng);
    const Direction gaze = sampleDiskDirection(head, deg2rad(options.gaze_offset_deg), rng);
    const LabeledMesh lm = placeLabeledMesh(meshes[static_cast<std::size_t>(s)], head, gaze,
                                            options.spec.distance_norm);
    const ImageBuffer bg = randomBackground(rng, BackgroundMode::SolidColor, {},
                                            options.spec.out_width, options.spec.out_height);
    const ImageBuffer img = rasterize(lm.mesh, intrinsics, bg);
    char name[32];
    std::snprintf(name, sizeof name, "%04d.png", k);
    const fs::path rel = fs::path("images") / toySubjectName(s) / name;
    writePng((root / rel).string(), img);
    // Labels are stored as the quantities the placement reproduces.
    rows[i] = ManifestEntry{toySubjectName(s),
                            rel.generic_string(),
                            (fs::path("meshes") / (toySubjectName(s) + ".mesh")).generic_string(),
                            headDirection(lm.head.rotation),
                            vectorToDirection<double>(lm.gaze),
                            "toy"};
  });
  writeManifest((root / "manifest.jsonl").string(), rows);
  return rows;
}

}  // namespace gazeaug
