#include "hsi/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hsi {

Mat3 skew(const Vec3& w) {
  Mat3 k;
  k << 0.0, -w.z(), w.y(),
       w.z(), 0.0, -w.x(),
       -w.y(), w.x(), 0.0;
  return k;
}

Mat3 so3_exp(const Vec3& w) {
  const double t2 = w.squaredNorm();
  if (t2 == 0.0) return Mat3::Identity();
  const Mat3 k = skew(w);
  double a, b;
  if (t2 < 1e-10) {
    a = 1.0 - t2 / 6.0;
    b = 0.5 - t2 / 24.0;
  } else {
    const double t = std::sqrt(t2);
    a = std::sin(t) / t;
    b = (1.0 - std::cos(t)) / t2;
  }
  return Mat3::Identity() + a * k + b * (k * k);
}

Mat3 so3_right_jacobian(const Vec3& w) {
  const double t2 = w.squaredNorm();
  const Mat3 k = skew(w);
  double a, b;
  if (t2 < 1e-10) {
    a = 0.5 - t2 / 24.0;
    b = 1.0 / 6.0 - t2 / 120.0;
  } else {
    const double t = std::sqrt(t2);
    a = (1.0 - std::cos(t)) / t2;
    b = (t - std::sin(t)) / (t2 * t);
  }
  return Mat3::Identity() - a * k + b * (k * k);
}

Mat3 rot_z(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Mat3 r;
  r << c, -s, 0.0,
       s, c, 0.0,
       0.0, 0.0, 1.0;
  return r;
}

Vec3 canonical_rotation(const Vec3& w) {
  const double n = w.norm();
  if (n <= std::numbers::pi) return w;
  return w * (std::remainder(n, 2.0 * std::numbers::pi) / n);
}

double wrap_angle(double a) {
  if (a >= -std::numbers::pi && a <= std::numbers::pi) return a;
  return std::remainder(a, 2.0 * std::numbers::pi);
}

SegmentClosest closest_on_segment(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  SegmentClosest out;
  out.t = t;
  out.point = a + t * ab;
  out.distance = (p - out.point).norm();
  return out;
}

Mat3 rotation_between(const Vec3& from, const Vec3& to) {
  return Eigen::Quaterniond::FromTwoVectors(from, to).toRotationMatrix();
}

bool is_orthonormal(const Mat3& r, double tol) {
  return (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace hsi
