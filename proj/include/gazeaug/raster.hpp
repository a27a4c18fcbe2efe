#pragma once

#include <vector>

#include "gazeaug/camnorm.hpp"
#include "gazeaug/image.hpp"
#include "gazeaug/rng.hpp"

namespace gazeaug {

struct FaceMesh;

struct ProjectedVertex {
  double x;      // px
  double y;      // px
  double depth;  // mm
};

ProjectedVertex projectVertex(const Vector3d& v, const CameraIntrinsics& intrinsics);

class DepthBuffer {
 public:
  DepthBuffer(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  double& at(int x, int y) { return depth_[static_cast<std::size_t>(y) * width_ + x]; }
  double at(int x, int y) const { return depth_[static_cast<std::size_t>(y) * width_ + x]; }

 private:
  int width_;
  int height_;
  std::vector<double> depth_;
};

struct RenderReport {
  int triangles_drawn = 0;
  int triangles_skipped_behind_camera = 0;
  int triangles_degenerate = 0;
};

// Z-buffered fill with perspective-correct color interpolation.
//  - pixel (i, j) is sampled at its center (i + 0.5, j + 0.5)
//  - a center exactly on an edge is covered only if that edge is a top or
//    left edge of the triangle (top-left rule), so shared edges are drawn once
//  - depth test is strict less-than; among equal depths the earlier triangle wins
//  - triangles with any vertex at z <= 0 are skipped and counted in the report
ImageBuffer rasterize(const FaceMesh& mesh, const CameraIntrinsics& intrinsics,
                      const ImageBuffer& background, RenderReport* report = nullptr);

enum class BackgroundMode { SolidColor, ImagePool };

ImageBuffer randomBackground(Rng& rng, BackgroundMode mode, const std::vector<ImageBuffer>& pool,
                             int width, int height);

}  // namespace gazeaug
