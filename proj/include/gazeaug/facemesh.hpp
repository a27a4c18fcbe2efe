#pragma once

#include <vector>

#include <Eigen/Core>

#include "gazeaug/camnorm.hpp"
#include "gazeaug/geometry.hpp"
#include "gazeaug/image.hpp"

namespace gazeaug {

using VertexMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using TriangleMatrix = Eigen::Matrix<int, Eigen::Dynamic, 3, Eigen::RowMajor>;
using PixelMatrix = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;

// Colored triangle mesh. Vertex indices are 0-based in memory.
struct FaceMesh {
  VertexMatrix vertices;   // mm
  TriangleMatrix triangles;
  VertexMatrix colors;     // RGB in [0, 1]
  std::vector<int> landmarks;
  Vector3d face_center = Vector3d::Zero();

  Eigen::Index vertexCount() const { return vertices.rows(); }
  Eigen::Index triangleCount() const { return triangles.rows(); }

  // Throws InvalidArgument on out-of-range indices, size mismatches or
  // non-finite data.
  void validate() const;

  // Centroid of the landmark vertices, or of all vertices without landmarks.
  Vector3d landmarkCentroid() const;
};

struct LabeledMesh {
  FaceMesh mesh;
  HeadPose head;
  Vector3d gaze = Vector3d(0, 0, -1);
};

// x -> scale * rotation * x + translation
struct SimilarityTransform {
  double scale = 1;
  Rotation3d rotation = Rotation3d::Identity();
  Vector3d translation = Vector3d::Zero();

  Vector3d apply(const Vector3d& x) const { return scale * (rotation * x) + translation; }
};

FaceMesh transformMesh(const FaceMesh& mesh, const SimilarityTransform& t);

struct ProjectiveMatchOptions {
  bool fit_rotation = false;  // also fit rotation
  int max_iterations = 100;
  double step_tolerance = 1e-8;
  double initial_damping = 1e-3;
};

struct ProjectiveMatchResult {
  SimilarityTransform transform;
  double initial_cost = 0;  // sum of squared pixel residuals
  double final_cost = 0;
  int iterations = 0;
};

// Thrown when the iteration budget runs out; carries the last iterate.
class NoConvergence : public Error {
 public:
  NoConvergence(const SimilarityTransform& last, double cost)
      : Error(ErrorCode::NoConvergence,
              "projective matching did not converge, cost " + std::to_string(cost)),
        last_(last),
        cost_(cost) {}

  const SimilarityTransform& last() const { return last_; }
  double cost() const { return cost_; }

 private:
  SimilarityTransform last_;
  double cost_;
};

// Levenberg-damped Gauss-Newton fit of the landmark reprojection error under
// perspective projection. Scale is held at init.scale: only the ratio of
// scale to depth is observable. By default the rotation stays at init.rotation.
ProjectiveMatchResult projectiveMatch(const VertexMatrix& model_vertices,
                                      const PixelMatrix& landmark_pixels,
                                      const std::vector<int>& landmark_indices,
                                      const CameraIntrinsics& intrinsics,
                                      const SimilarityTransform& init,
                                      const ProjectiveMatchOptions& options = {});

// Lifts vertex colors from the image at each vertex's projection.
FaceMesh textureFromImage(const FaceMesh& mesh, const ImageBuffer& image,
                          const CameraIntrinsics& intrinsics);

// Rigid rotation about the face center; labels follow exactly.
LabeledMesh rotateAboutCenter(const LabeledMesh& lm, const Rotation3d& R_aug);

inline Rotation3d headTargetRotation(const Direction& source_head, const Direction& target_head) {
  return rotationBetween(source_head, target_head);
}

inline Rotation3d gazeTargetRotation(const Direction& source_gaze, const Direction& target_gaze) {
  return rotationBetween(source_gaze, target_gaze);
}

// Places a model-space mesh (face center at its `c` point, frontal pose
// looking down -z) into camera space at `distance` mm on the optical axis
// with the given head direction, and attaches head/gaze labels.
SimilarityTransform canonicalPlacement(const FaceMesh& model, const Direction& head,
                                       double distance);
LabeledMesh placeLabeledMesh(const FaceMesh& model, const Direction& head, const Direction& gaze,
                             double distance);

}  // namespace gazeaug
