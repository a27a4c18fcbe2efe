#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "gazeaug/error.hpp"
#include "gazeaug/rng.hpp"

namespace gazeaug {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Rotation3 = Eigen::Matrix<Scalar, 3, 3>;

using Vector3d = Vector3<double>;
using Rotation3d = Rotation3<double>;

// Gaze or head direction as (pitch, yaw) in radians.
// Valid domain: |pitch| <= pi/2, yaw in (-pi, pi].
template <typename Scalar>
struct Direction_ {
  Scalar pitch{0};
  Scalar yaw{0};

  friend bool operator==(const Direction_&, const Direction_&) = default;
};

using Direction = Direction_<double>;

template <typename Scalar>
constexpr Scalar deg2rad(Scalar deg) {
  return deg * std::numbers::pi_v<Scalar> / Scalar(180);
}

template <typename Scalar>
constexpr Scalar rad2deg(Scalar rad) {
  return rad * Scalar(180) / std::numbers::pi_v<Scalar>;
}

template <typename Scalar>
Scalar wrapAngle(Scalar a) {
  constexpr Scalar pi = std::numbers::pi_v<Scalar>;
  a = std::remainder(a, Scalar(2) * pi);
  return a <= -pi ? a + Scalar(2) * pi : a;
}

template <typename Scalar>
bool isValid(const Direction_<Scalar>& d) {
  constexpr Scalar pi = std::numbers::pi_v<Scalar>;
  return std::isfinite(d.pitch) && std::isfinite(d.yaw) && std::abs(d.pitch) <= pi / 2 &&
         d.yaw > -pi && d.yaw <= pi;
}

// v = (-cos p sin y, -sin p, -cos p cos y). Camera looks along +z with image
// y pointing down, so (0, 0) faces the camera.
template <typename Scalar>
Vector3<Scalar> directionToVector(const Direction_<Scalar>& d) {
  using std::cos;
  using std::sin;
  const Scalar cp = cos(d.pitch);
  return {-cp * sin(d.yaw), -sin(d.pitch), -cp * cos(d.yaw)};
}

template <typename Scalar>
Direction_<Scalar> vectorToDirection(const Vector3<Scalar>& v) {
  const Scalar n = v.norm();
  if (!(std::abs(n - Scalar(1)) <= Scalar(1e-6)))
    throw Error(ErrorCode::NonUnitInput, "vector norm " + std::to_string(double(n)));
  const Scalar y = std::clamp(v.y(), Scalar(-1), Scalar(1));
  // + 0 folds -0 into +0 so the poles give yaw 0 and yaw stays in (-pi, pi].
  return {-std::asin(y), std::atan2(-v.x() + Scalar(0), -v.z() + Scalar(0))};
}

template <typename Scalar>
Rotation3<Scalar> rotationX(Scalar a) {
  using std::cos;
  using std::sin;
  Rotation3<Scalar> r;
  r << 1, 0, 0, 0, cos(a), -sin(a), 0, sin(a), cos(a);
  return r;
}

template <typename Scalar>
Rotation3<Scalar> rotationY(Scalar a) {
  using std::cos;
  using std::sin;
  Rotation3<Scalar> r;
  r << cos(a), 0, sin(a), 0, 1, 0, -sin(a), 0, cos(a);
  return r;
}

// Ry(yaw) * Rx(-pitch); maps the frontal axis (0,0,-1) onto directionToVector(d).
template <typename Scalar>
Rotation3<Scalar> rotationFromDirection(const Direction_<Scalar>& d) {
  return rotationY(d.yaw) * rotationX(-d.pitch);
}

// EulerComposition forms a group: between(b,c) * between(a,b) == between(a,c).
// Minimal is the smallest (axis-angle) rotation taking v(src) to v(dst); it
// does not compose exactly and is offered for experimentation only.
enum class RotationConstruction { EulerComposition, Minimal };

template <typename Scalar>
Rotation3<Scalar> minimalRotation(const Vector3<Scalar>& from, const Vector3<Scalar>& to) {
  return Eigen::Quaternion<Scalar>::FromTwoVectors(from, to).toRotationMatrix();
}

template <typename Scalar>
Rotation3<Scalar> rotationBetween(const Direction_<Scalar>& src, const Direction_<Scalar>& dst,
                                  RotationConstruction construction =
                                      RotationConstruction::EulerComposition) {
  if (src == dst) return Rotation3<Scalar>::Identity();
  if (construction == RotationConstruction::Minimal)
    return minimalRotation<Scalar>(directionToVector(src), directionToVector(dst));
  return rotationFromDirection(dst) * rotationFromDirection(src).transpose();
}

// Angle between two unit vectors in [0, pi]. The atan2 form keeps full
// precision near 0 and pi where acos(dot) loses half the digits.
template <typename Scalar>
Scalar angularError(const Vector3<Scalar>& a, const Vector3<Scalar>& b) {
  const Scalar s = a.cross(b).norm();
  const Scalar c = std::clamp(a.dot(b), Scalar(-1), Scalar(1));
  return std::atan2(s, c);
}

template <typename Scalar>
Scalar angularError(const Direction_<Scalar>& a, const Direction_<Scalar>& b) {
  return angularError<Scalar>(directionToVector(a), directionToVector(b));
}

// Uniform draw from the Euclidean disk of `radius` around `center` in
// (pitch, yaw) space: r = radius * sqrt(u), theta = 2 pi u'. Yaw is wrapped
// into (-pi, pi]; pitch is clamped to +-pi/2 (only reachable off-center).
template <typename Scalar = double>
Direction_<Scalar> sampleDiskDirection(const Direction_<Scalar>& center, Scalar radius, Rng& rng) {
  constexpr Scalar pi = std::numbers::pi_v<Scalar>;
  if (!(radius > Scalar(0) && radius <= pi / 2))
    throw Error(ErrorCode::InvalidArgument, "disk radius must lie in (0, pi/2]");
  const Scalar r = radius * std::sqrt(static_cast<Scalar>(uniform01(rng)));
  const Scalar theta = Scalar(2) * pi * static_cast<Scalar>(uniform01(rng));
  Direction_<Scalar> d{center.pitch + r * std::sin(theta), center.yaw + r * std::cos(theta)};
  d.pitch = std::clamp(d.pitch, -pi / 2, pi / 2);
  d.yaw = wrapAngle(d.yaw);
  return d;
}

}  // namespace gazeaug
