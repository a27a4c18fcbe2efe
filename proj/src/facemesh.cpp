#include "gazeaug/facemesh.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "gazeaug/raster.hpp"

namespace gazeaug {

void FaceMesh::validate() const {
  const auto n = vertices.rows();
  if (n < 3) throw Error(ErrorCode::InvalidArgument, "mesh needs at least 3 vertices");
  if (colors.rows() != n) throw Error(ErrorCode::InvalidArgument, "color count != vertex count");
  if (!vertices.allFinite() || !colors.allFinite() || !face_center.allFinite())
    throw Error(ErrorCode::NonFinite, "mesh contains non-finite values");
  if (triangles.size() > 0 && (triangles.minCoeff() < 0 || triangles.maxCoeff() >= n))
    throw Error(ErrorCode::InvalidArgument, "triangle index out of range");
  for (int l : landmarks)
    if (l < 0 || l >= n) throw Error(ErrorCode::InvalidArgument, "landmark index out of range");
}

Vector3d FaceMesh::landmarkCentroid() const {
  if (landmarks.empty()) return vertices.colwise().mean().transpose();
  Vector3d sum = Vector3d::Zero();
  for (int l : landmarks) sum += vertices.row(l).transpose();
  return sum / static_cast<double>(landmarks.size());
}

FaceMesh transformMesh(const FaceMesh& mesh, const SimilarityTransform& t) {
  FaceMesh out = mesh;
  for (Eigen::Index i = 0; i < mesh.vertices.rows(); ++i)
    out.vertices.row(i) = t.apply(mesh.vertices.row(i).transpose()).transpose();
  out.face_center = t.apply(mesh.face_center);
  return out;
}

namespace {

Eigen::Matrix3d skew(const Vector3d& v) {
  Eigen::Matrix3d s;
  s << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return s;
}

// Parameters: [tx, ty, tz] (+ [wx, wy, wz] left-multiplied rotation increment
// when fitting rotation). Scale stays at init: c * (scale, translation)
// projects identically for every c > 0.
struct MatchProblem {
  const VertexMatrix& model;
  const PixelMatrix& pixels;
  const std::vector<int>& indices;
  const CameraIntrinsics& k;
  bool fit_rotation;

  int paramCount() const { return fit_rotation ? 6 : 3; }

  SimilarityTransform update(const SimilarityTransform& t, const Eigen::VectorXd& delta) const {
    SimilarityTransform out = t;
    out.translation += delta.segment<3>(0);
    if (fit_rotation) {
      const Vector3d w = delta.segment<3>(3);
      const double angle = w.norm();
      if (angle > 0) out.rotation = Eigen::AngleAxisd(angle, w / angle).toRotationMatrix() * t.rotation;
    }
    return out;
  }

  // Residuals (projected - observed) and Jacobian; returns false if any
  // landmark lands at or behind the camera.
  bool linearize(const SimilarityTransform& t, Eigen::VectorXd& r, Eigen::MatrixXd* J) const {
    const auto L = static_cast<Eigen::Index>(indices.size());
    r.resize(2 * L);
    if (J) J->setZero(2 * L, paramCount());
    for (Eigen::Index i = 0; i < L; ++i) {
      const Vector3d m = model.row(indices[i]).transpose();
      const Vector3d rm = t.rotation * m;
      const Vector3d p = t.scale * rm + t.translation;
      if (!(p.z() > 0)) return false;
      const double iz = 1.0 / p.z();
      r(2 * i) = k.fx * p.x() * iz + k.cx - pixels(i, 0);
      r(2 * i + 1) = k.fy * p.y() * iz + k.cy - pixels(i, 1);
      if (!J) continue;
      Eigen::Matrix<double, 2, 3> dproj;
      dproj << k.fx * iz, 0, -k.fx * p.x() * iz * iz, 0, k.fy * iz, -k.fy * p.y() * iz * iz;
      J->block<2, 3>(2 * i, 0) = dproj;
      if (fit_rotation) J->block<2, 3>(2 * i, 3) = -dproj * skew(t.scale * rm);
    }
    return true;
  }
};

}  // namespace

ProjectiveMatchResult projectiveMatch(const VertexMatrix& model_vertices,
                                      const PixelMatrix& landmark_pixels,
                                      const std::vector<int>& landmark_indices,
                                      const CameraIntrinsics& intrinsics,
                                      const SimilarityTransform& init,
                                      const ProjectiveMatchOptions& options) {
  if (landmark_pixels.rows() != static_cast<Eigen::Index>(landmark_indices.size()))
    throw Error(ErrorCode::DimensionMismatch, "landmark pixel count != landmark index count");
  if (landmark_indices.size() < 4)
    throw Error(ErrorCode::InvalidArgument, "projective matching needs at least 4 landmarks");
  for (int l : landmark_indices)
    if (l < 0 || l >= model_vertices.rows())
      throw Error(ErrorCode::InvalidArgument, "landmark index out of range");
  if (!(init.scale > 0)) throw Error(ErrorCode::InvalidArgument, "initial scale must be positive");
  intrinsics.validate();

  const MatchProblem problem{model_vertices, landmark_pixels, landmark_indices, intrinsics,
                             options.fit_rotation};
  const int n = problem.paramCount();

  SimilarityTransform current = init;
  Eigen::VectorXd r;
  Eigen::MatrixXd J;
  if (!problem.linearize(current, r, &J))
    throw Error(ErrorCode::BehindCamera, "landmark behind camera at initial transform");
  double cost = r.squaredNorm();

  ProjectiveMatchResult result;
  result.initial_cost = cost;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(J);
  if (qr.rank() < n)
    throw Error(ErrorCode::SingularNormalEquations, "landmark Jacobian is rank deficient");

  double lambda = options.initial_damping;
  Eigen::VectorXd r_trial;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    result.iterations = iter + 1;
    const Eigen::MatrixXd H = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * r;
    Eigen::MatrixXd A = H;
    A.diagonal() += lambda * H.diagonal();
    const Eigen::VectorXd delta = A.ldlt().solve(-g);
    if (!delta.allFinite())
      throw Error(ErrorCode::SingularNormalEquations, "normal equations are singular");

    if (delta.norm() < options.step_tolerance) {
      result.transform = current;
      result.final_cost = cost;
      return result;
    }

    const SimilarityTransform trial = problem.update(current, delta);
    if (problem.linearize(trial, r_trial, nullptr) &&
        r_trial.squaredNorm() < cost) {
      current = trial;
      problem.linearize(current, r, &J);
      cost = r.squaredNorm();
      lambda /= 10;
    } else {
      lambda *= 10;
    }
  }
  throw NoConvergence(current, cost);
}

FaceMesh textureFromImage(const FaceMesh& mesh, const ImageBuffer& image,
                          const CameraIntrinsics& intrinsics) {
  FaceMesh out = mesh;
  for (Eigen::Index i = 0; i < mesh.vertices.rows(); ++i) {
    const auto p = projectVertex(mesh.vertices.row(i).transpose(), intrinsics);
    out.colors.row(i) = image.sample(p.x, p.y).transpose();
  }
  return out;
}

LabeledMesh rotateAboutCenter(const LabeledMesh& lm, const Rotation3d& R_aug) {
  if (R_aug == Rotation3d::Identity()) return lm;
  LabeledMesh out = lm;
  const Vector3d& c = lm.mesh.face_center;
  for (Eigen::Index i = 0; i < lm.mesh.vertices.rows(); ++i)
    out.mesh.vertices.row(i) =
        (R_aug * (lm.mesh.vertices.row(i).transpose() - c) + c).transpose();
  out.gaze = R_aug * lm.gaze;
  out.head.rotation = R_aug * lm.head.rotation;
  return out;
}

SimilarityTransform canonicalPlacement(const FaceMesh& model, const Direction& head,
                                       double distance) {
  SimilarityTransform t;
  t.rotation = rotationFromDirection(head);
  t.translation = Vector3d(0, 0, distance) - t.rotation * model.face_center;
  return t;
}

LabeledMesh placeLabeledMesh(const FaceMesh& model, const Direction& head, const Direction& gaze,
                             double distance) {
  const SimilarityTransform t = canonicalPlacement(model, head, distance);
  LabeledMesh lm;
  lm.mesh = transformMesh(model, t);
  lm.head.rotation = t.rotation;
  lm.head.translation = lm.mesh.face_center;
  lm.gaze = directionToVector(gaze);
  return lm;
}

}  // namespace gazeaug
