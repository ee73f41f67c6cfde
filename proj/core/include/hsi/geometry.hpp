#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace hsi {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;
using Mat3 = Eigen::Matrix3d;

/// Rigid transform: rotation followed by translation.
struct Rigid {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 operator*(const Vec3& p) const { return rotation * p + translation; }
  Rigid operator*(const Rigid& o) const {
    return {rotation * o.rotation, rotation * o.translation + translation};
  }
  Rigid inverse() const {
    Mat3 rt = rotation.transpose();
    return {rt, -(rt * translation)};
  }
};

Mat3 skew(const Vec3& w);

/// Exponential map from an axis-angle vector to a rotation matrix.
Mat3 so3_exp(const Vec3& w);

/// Right Jacobian of the exponential map: exp(w + d) ~= exp(w) exp(Jr(w) d).
Mat3 so3_right_jacobian(const Vec3& w);

/// Rotation by `angle` about +z.
Mat3 rot_z(double angle);

/// Equivalent axis-angle vector with norm <= pi (same rotation matrix).
Vec3 canonical_rotation(const Vec3& w);

/// Wraps an angle into [-pi, pi].
double wrap_angle(double a);

struct SegmentClosest {
  double t = 0.0;        // clamped axial parameter in [0, 1]
  Vec3 point;            // closest point on the segment
  double distance = 0.0;
};

SegmentClosest closest_on_segment(const Vec3& p, const Vec3& a, const Vec3& b);

/// Rotation taking unit vector `from` onto unit vector `to`.
Mat3 rotation_between(const Vec3& from, const Vec3& to);

bool is_orthonormal(const Mat3& r, double tol = 1e-6);

}  // namespace hsi
