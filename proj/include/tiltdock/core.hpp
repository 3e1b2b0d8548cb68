#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace tiltdock {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

inline constexpr double kGravity = 9.8;  // m/s^2, z-up world frame
inline constexpr double kPi = 3.141592653589793238462643383279502884;

inline Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(),
       v.z(), 0, -v.x(),
       -v.y(), v.x(), 0;
  return m;
}

// Inverse of skew for (near-)antisymmetric matrices.
inline Vec3 vee(const Mat3& m) {
  return {m(2, 1), m(0, 2), m(1, 0)};
}

// Wrap an angle to (-pi, pi].
inline double wrap_pi(double a) {
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a <= 0.0) a += 2.0 * kPi;
  return a - kPi;
}

// Rotation about a fixed axis.
inline Mat3 rot_x(double a) {
  Mat3 m;
  m << 1, 0, 0,
       0, std::cos(a), -std::sin(a),
       0, std::sin(a), std::cos(a);
  return m;
}

inline Mat3 rot_y(double a) {
  Mat3 m;
  m << std::cos(a), 0, std::sin(a),
       0, 1, 0,
       -std::sin(a), 0, std::cos(a);
  return m;
}

inline Mat3 rot_z(double a) {
  Mat3 m;
  m << std::cos(a), -std::sin(a), 0,
       std::sin(a), std::cos(a), 0,
       0, 0, 1;
  return m;
}

// Exponential map so(3) -> SO(3).
inline Mat3 exp_so3(const Vec3& w) {
  const double th = w.norm();
  if (th < 1e-12) {
    return Mat3::Identity() + skew(w);
  }
  const Mat3 K = skew(w / th);
  return Mat3::Identity() + std::sin(th) * K + (1.0 - std::cos(th)) * K * K;
}

// Nearest rotation matrix (polar projection via SVD).
inline Mat3 orthonormalize(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Mat3 d = Mat3::Identity();
    d(2, 2) = -1.0;
    r = svd.matrixU() * d * svd.matrixV().transpose();
  }
  return r;
}

// Minimal rotation taking unit vector `from` onto unit vector `to`.
// Axis = from x to, angle = angle between. Throws if nearly antiparallel.
inline Mat3 minimal_rotation(const Vec3& from, const Vec3& to) {
  const Vec3 f = from.normalized();
  const Vec3 t = to.normalized();
  const double c = f.dot(t);
  if (c < std::cos(kPi - 0.0175)) {  // within ~1 deg of antiparallel
    throw std::domain_error("minimal_rotation: axis undefined near antiparallel");
  }
  const Vec3 axis = f.cross(t);
  const double s = axis.norm();
  if (s < 1e-15) return Mat3::Identity();
  const double ang = std::atan2(s, c);
  return exp_so3(axis / s * ang);
}

// Euler angles for R = Rz(yaw) * Ry(pitch) * Rx(roll).
struct EulerZyx {
  double roll;   // about x
  double pitch;  // about y
  double yaw;    // about z
};

inline EulerZyx euler_zyx(const Mat3& r) {
  EulerZyx e;
  e.pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
  e.roll = std::atan2(r(2, 1), r(2, 2));
  e.yaw = std::atan2(r(1, 0), r(0, 0));
  return e;
}

inline Mat3 from_euler_zyx(double roll, double pitch, double yaw) {
  return rot_z(yaw) * rot_y(pitch) * rot_x(roll);
}

// Axis-angle of a rotation matrix; angle in [0, pi].
struct AxisAngle {
  Vec3 axis;
  double angle;
};

inline AxisAngle axis_angle(const Mat3& r) {
  Eigen::AngleAxisd aa(r);
  return {aa.axis(), aa.angle()};
}

// Moore-Penrose pseudoinverse with relative singular-value cutoff.
inline MatX pinv(const MatX& m, double rel_cutoff = 1e-10) {
  Eigen::JacobiSVD<MatX> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VecX& sv = svd.singularValues();
  const double cutoff = sv.size() ? rel_cutoff * sv(0) : 0.0;
  VecX inv_sv(sv.size());
  for (int i = 0; i < sv.size(); ++i) {
    inv_sv(i) = sv(i) > cutoff ? 1.0 / sv(i) : 0.0;
  }
  return svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().transpose();
}

}  // namespace tiltdock
