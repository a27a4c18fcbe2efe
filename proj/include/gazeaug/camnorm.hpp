#pragma once

#include <Eigen/Core>

#include "gazeaug/geometry.hpp"
#include "gazeaug/image.hpp"

namespace gazeaug {

// Pinhole intrinsics, zero skew.
struct CameraIntrinsics {
  double fx = 500;
  double fy = 500;
  double cx = 64;
  double cy = 64;

  Eigen::Matrix3d matrix() const;
  void validate() const;
};

// Virtual camera of the normalized space.
struct NormalizationSpec {
  double focal_norm = 500;     // px
  double distance_norm = 600;  // mm
  int out_width = 128;
  int out_height = 128;

  // Pinhole matrix of the virtual camera, principal point at the image center.
  Eigen::Matrix3d cameraMatrix() const;
  CameraIntrinsics intrinsics() const;
  void validate() const;
};

struct HeadPose {
  Rotation3d rotation = Rotation3d::Identity();
  Vector3d translation = Vector3d::Zero();  // mm, camera coordinates
};

// Forward axis of a head rotation, i.e. rotation * (0, 0, -1).
Vector3d headForward(const Rotation3d& rotation);
Direction headDirection(const Rotation3d& rotation);

// Rows are the normalized camera axes: z toward the face center, y orthogonal
// to z and the head x-axis, x completing a right-handed frame.
Rotation3d normalizationRotation(const Vector3d& face_center, const HeadPose& head);

// W = C_n * diag(1, 1, distance_norm / face_distance) * R_n * C_r^-1.
Eigen::Matrix3d normalizationWarp(const CameraIntrinsics& intrinsics, const Rotation3d& R_n,
                                  double face_distance, const NormalizationSpec& spec);

// Inverse-maps every output pixel center through W and samples bilinearly
// with edge clamping.
ImageBuffer warpPerspective(const ImageBuffer& image, const Eigen::Matrix3d& W, int out_width,
                            int out_height);

struct NormalizedSample {
  ImageBuffer image;
  Direction head;
  Direction gaze;
  Rotation3d rotation;     // R_n
  Eigen::Matrix3d warp;    // W
};

NormalizedSample normalizeSample(const ImageBuffer& image, const CameraIntrinsics& intrinsics,
                                 const HeadPose& head, const Vector3d& gaze_vector,
                                 const Vector3d& face_center, const NormalizationSpec& spec);

// R_n^T * directionToVector(d).
Vector3d denormalizeDirection(const Direction& d, const Rotation3d& R_n);

}  // namespace gazeaug
