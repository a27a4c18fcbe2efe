#include "gazeaug/camnorm.hpp"

#include <Eigen/LU>

namespace gazeaug {

Eigen::Matrix3d CameraIntrinsics::matrix() const {
  Eigen::Matrix3d k;
  k << fx, 0, cx, 0, fy, cy, 0, 0, 1;
  return k;
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0 && fy > 0)) throw Error(ErrorCode::InvalidArgument, "focal lengths must be positive");
}

Eigen::Matrix3d NormalizationSpec::cameraMatrix() const { return intrinsics().matrix(); }

CameraIntrinsics NormalizationSpec::intrinsics() const {
  return {focal_norm, focal_norm, out_width / 2.0, out_height / 2.0};
}

void NormalizationSpec::validate() const {
  if (!(focal_norm > 0 && distance_norm > 0 && out_width > 0 && out_height > 0))
    throw Error(ErrorCode::InvalidArgument, "normalization parameters must be positive");
}

Vector3d headForward(const Rotation3d& rotation) { return rotation * Vector3d(0, 0, -1); }

Direction headDirection(const Rotation3d& rotation) {
  return vectorToDirection<double>(headForward(rotation));
}

Rotation3d normalizationRotation(const Vector3d& face_center, const HeadPose& head) {
  const double distance = face_center.norm();
  if (!(distance > 0)) throw Error(ErrorCode::DegenerateGeometry, "face center at camera origin");
  const Vector3d z = face_center / distance;
  const Vector3d head_x = head.rotation.col(0);
  const Vector3d y_raw = z.cross(head_x);
  if (y_raw.norm() < 1e-8)
    throw Error(ErrorCode::DegenerateGeometry, "face direction parallel to head x-axis");
  const Vector3d y = y_raw.normalized();
  const Vector3d x = y.cross(z).normalized();
  Rotation3d r;
  r.row(0) = x.transpose();
  r.row(1) = y.transpose();
  r.row(2) = z.transpose();
  return r;
}

Eigen::Matrix3d normalizationWarp(const CameraIntrinsics& intrinsics, const Rotation3d& R_n,
                                  double face_distance, const NormalizationSpec& spec) {
  if (!(face_distance > 0)) throw Error(ErrorCode::InvalidArgument, "face distance must be positive");
  intrinsics.validate();
  spec.validate();
  const Eigen::Matrix3d scale =
      Eigen::Vector3d(1, 1, spec.distance_norm / face_distance).asDiagonal();
  return spec.cameraMatrix() * scale * R_n * intrinsics.matrix().inverse();
}

ImageBuffer warpPerspective(const ImageBuffer& image, const Eigen::Matrix3d& W, int out_width,
                            int out_height) {
  const Eigen::Matrix3d inv = W.inverse();
  ImageBuffer out(out_width, out_height);
  for (int y = 0; y < out_height; ++y)
    for (int x = 0; x < out_width; ++x) {
      const Eigen::Vector3d p = inv * Eigen::Vector3d(x + 0.5, y + 0.5, 1.0);
      out.setPixel(x, y, image.sample(p.x() / p.z(), p.y() / p.z()));
    }
  return out;
}

NormalizedSample normalizeSample(const ImageBuffer& image, const CameraIntrinsics& intrinsics,
                                 const HeadPose& head, const Vector3d& gaze_vector,
                                 const Vector3d& face_center, const NormalizationSpec& spec) {
  NormalizedSample out;
  out.rotation = normalizationRotation(face_center, head);
  out.warp = normalizationWarp(intrinsics, out.rotation, face_center.norm(), spec);
  out.image = warpPerspective(image, out.warp, spec.out_width, spec.out_height);
  out.gaze = vectorToDirection<double>(out.rotation * gaze_vector);
  out.head = vectorToDirection<double>(out.rotation * headForward(head.rotation));
  return out;
}

Vector3d denormalizeDirection(const Direction& d, const Rotation3d& R_n) {
  return R_n.transpose() * directionToVector(d);
}

}  // namespace gazeaug
