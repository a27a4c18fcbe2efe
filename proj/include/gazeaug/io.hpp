#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gazeaug/facemesh.hpp"
#include "gazeaug/image.hpp"
#include "gazeaug/manifest.hpp"
#include "gazeaug/metrics.hpp"
#include "gazeaug/redirect.hpp"

namespace gazeaug {

// Shortest text that names `v` exactly: printf("%.17g").
std::string formatDouble(double v);

// --- Manifests: JSON lines with keys subject, image, mesh, head_pitch,
// head_yaw, gaze_pitch, gaze_yaw, camera (radians). Writers emit keys in that
// order with 17 significant digits.
std::string manifestLine(const ManifestEntry& e);
ManifestEntry parseManifestLine(const std::string& line, const std::string& source = "<string>",
                                std::uint64_t line_number = 1);
std::vector<ManifestEntry> readManifest(const std::string& path);
void writeManifest(const std::string& path, const std::vector<ManifestEntry>& rows);

// --- Mesh text format, one record per line:
//   v x y z r g b   vertex with color
//   f i j k         triangle, 1-based vertex indices
//   l i             landmark vertex, 1-based
//   c x y z         face center
// Blank lines and lines starting with '#' are ignored. Without a `c` record
// the face center is the landmark centroid.
FaceMesh parseMesh(const std::string& text, const std::string& source = "<string>");
FaceMesh readMesh(const std::string& path);
std::string meshText(const FaceMesh& mesh);
void writeMesh(const std::string& path, const FaceMesh& mesh);

// --- PNG, 8 bits per channel RGB. Gray/alpha/palette inputs are converted.
ImageBuffer readPng(const std::string& path);
void writePng(const std::string& path, const ImageBuffer& image);
std::vector<std::uint8_t> encodePng(const ImageBuffer& image);

// --- GZFT feature files (little endian):
//   "GZFT" | u32 version=1 | u32 count | u32 dim | count*dim f32 row-major
//   [ u32 json_length | json bytes ]   optional trailer
struct FeatureFile {
  FeatureSet features;
  std::optional<std::string> header_json;
};

inline constexpr std::uint32_t kFeatureVersion = 1;

std::vector<std::uint8_t> encodeFeatureFile(const FeatureFile& f);
FeatureFile decodeFeatureFile(const std::vector<std::uint8_t>& bytes,
                              const std::string& source = "<bytes>");
FeatureFile readFeatureFile(const std::string& path);
void writeFeatureFile(const std::string& path, const FeatureFile& f);

// --- Latent dumps: a GZFT file with dim 3. Rows are the factor embeddings in
// header order, followed by the id code packed three values per row
// (zero-padded). The JSON header names factors, row counts and conditions.
FeatureFile encodeLatent(const LatentState& state);
LatentState decodeLatent(const FeatureFile& f);

// --- Homographies: 9 little-endian f64, row-major.
std::vector<std::uint8_t> encodeHomography(const Eigen::Matrix3d& h);
Eigen::Matrix3d decodeHomography(const std::vector<std::uint8_t>& bytes);

std::vector<std::uint8_t> readBytes(const std::string& path);
void writeBytes(const std::string& path, const std::vector<std::uint8_t>& bytes);
std::string readText(const std::string& path);
void writeText(const std::string& path, const std::string& text);

}  // namespace gazeaug
