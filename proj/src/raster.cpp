#include "gazeaug/raster.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "gazeaug/facemesh.hpp"

namespace gazeaug {

ProjectedVertex projectVertex(const Vector3d& v, const CameraIntrinsics& intrinsics) {
  if (!(v.z() > 0)) throw Error(ErrorCode::BehindCamera, "vertex at z=" + std::to_string(v.z()));
  return {intrinsics.fx * v.x() / v.z() + intrinsics.cx,
          intrinsics.fy * v.y() / v.z() + intrinsics.cy, v.z()};
}

DepthBuffer::DepthBuffer(int width, int height)
    : width_(width),
      height_(height),
      depth_(static_cast<std::size_t>(width) * height, std::numeric_limits<double>::infinity()) {}

namespace {

struct ScreenVertex {
  double x, y, inv_z;
  Rgb color_over_z;
};

// Positive when p lies on the interior side of a->b for a positively
// oriented triangle.
double edgeFunction(const ScreenVertex& a, const ScreenVertex& b, double px, double py) {
  return (px - a.x) * (b.y - a.y) - (py - a.y) * (b.x - a.x);
}

// Inward normal of a->b is (b.y - a.y, a.x - b.x). Left edge: normal points
// right (+x). Top edge: horizontal with normal pointing down (+y, image rows).
bool isTopLeft(const ScreenVertex& a, const ScreenVertex& b) {
  const double nx = b.y - a.y;
  const double ny = a.x - b.x;
  return nx > 0 || (nx == 0 && ny > 0);
}

bool covers(double w, bool top_left) { return w > 0 || (w == 0 && top_left); }

void drawTriangle(std::array<ScreenVertex, 3> v, ImageBuffer& image, DepthBuffer& depth,
                  RenderReport& report) {
  double area = edgeFunction(v[0], v[1], v[2].x, v[2].y);
  if (area == 0 || !std::isfinite(area)) {
    ++report.triangles_degenerate;
    return;
  }
  if (area < 0) {
    std::swap(v[1], v[2]);
    area = -area;
  }
  const bool tl0 = isTopLeft(v[1], v[2]);
  const bool tl1 = isTopLeft(v[2], v[0]);
  const bool tl2 = isTopLeft(v[0], v[1]);

  const double min_x = std::min({v[0].x, v[1].x, v[2].x});
  const double max_x = std::max({v[0].x, v[1].x, v[2].x});
  const double min_y = std::min({v[0].y, v[1].y, v[2].y});
  const double max_y = std::max({v[0].y, v[1].y, v[2].y});
  // Pixel i is a candidate when min <= i + 0.5 <= max.
  const int x0 = std::max(0, static_cast<int>(std::ceil(min_x - 0.5)));
  const int x1 = std::min(image.width() - 1, static_cast<int>(std::floor(max_x - 0.5)));
  const int y0 = std::max(0, static_cast<int>(std::ceil(min_y - 0.5)));
  const int y1 = std::min(image.height() - 1, static_cast<int>(std::floor(max_y - 0.5)));

  ++report.triangles_drawn;
  for (int y = y0; y <= y1; ++y) {
    const double py = y + 0.5;
    for (int x = x0; x <= x1; ++x) {
      const double px = x + 0.5;
      const double w0 = edgeFunction(v[1], v[2], px, py);
      const double w1 = edgeFunction(v[2], v[0], px, py);
      const double w2 = edgeFunction(v[0], v[1], px, py);
      if (!covers(w0, tl0) || !covers(w1, tl1) || !covers(w2, tl2)) continue;
      const double b0 = w0 / area;
      const double b1 = w1 / area;
      const double b2 = w2 / area;
      // 1/z is affine in screen space.
      const double inv_z = b0 * v[0].inv_z + b1 * v[1].inv_z + b2 * v[2].inv_z;
      const double z = 1.0 / inv_z;
      if (!(z < depth.at(x, y))) continue;
      depth.at(x, y) = z;
      const Rgb c = (b0 * v[0].color_over_z + b1 * v[1].color_over_z + b2 * v[2].color_over_z) * z;
      image.setPixel(x, y, c);
    }
  }
}

}  // namespace

ImageBuffer rasterize(const FaceMesh& mesh, const CameraIntrinsics& intrinsics,
                      const ImageBuffer& background, RenderReport* report) {
  intrinsics.validate();
  RenderReport local;
  ImageBuffer image = background;
  DepthBuffer depth(image.width(), image.height());

  for (Eigen::Index t = 0; t < mesh.triangles.rows(); ++t) {
    std::array<ScreenVertex, 3> sv;
    bool behind = false;
    for (int k = 0; k < 3; ++k) {
      const int idx = mesh.triangles(t, k);
      const Vector3d p = mesh.vertices.row(idx).transpose();
      if (!(p.z() > 0)) {
        behind = true;
        break;
      }
      const ProjectedVertex pv = projectVertex(p, intrinsics);
      const double inv_z = 1.0 / pv.depth;
      sv[k] = {pv.x, pv.y, inv_z, mesh.colors.row(idx).transpose() * inv_z};
    }
    if (behind) {
      ++local.triangles_skipped_behind_camera;
      continue;
    }
    drawTriangle(sv, image, depth, local);
  }
  if (report) *report = local;
  return image;
}

ImageBuffer randomBackground(Rng& rng, BackgroundMode mode, const std::vector<ImageBuffer>& pool,
                             int width, int height) {
  if (mode == BackgroundMode::SolidColor) {
    const double r = uniform01(rng);
    const double g = uniform01(rng);
    const double b = uniform01(rng);
    return ImageBuffer(width, height, Rgb(r, g, b));
  }
  if (pool.empty()) throw Error(ErrorCode::EmptyPool, "background image pool is empty");
  return resizeBilinear(pool[uniformIndex(rng, pool.size())], width, height);
}

}  // namespace gazeaug
