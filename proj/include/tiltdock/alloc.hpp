#pragma once

#include "tiltdock/airframe.hpp"
#include "tiltdock/core.hpp"

namespace tiltdock {

enum class Frame { CoG, C, World };

struct WrenchVector {
  Vec3 force = Vec3::Zero();   // N
  Vec3 torque = Vec3::Zero();  // N m
  Frame frame = Frame::CoG;
};

inline WrenchVector operator+(const WrenchVector& a, const WrenchVector& b) {
  if (a.frame != b.frame) {
    throw std::invalid_argument("wrench arithmetic across frames");
  }
  return {a.force + b.force, a.torque + b.torque, a.frame};
}

struct AllocationMatrices {
  MatX Q_tran;  // 3 x n, columns u_i
  MatX Q_rot;   // 3 x n, columns p_i x u_i (+ sigma_i u_i when requested)
  MatX Q;       // 6 x n stack
};

inline AllocationMatrices build_allocation(const AirframeModel& m,
                                           bool include_counter_torque = false) {
  const int n = m.rotor_count();
  AllocationMatrices a;
  a.Q_tran.resize(3, n);
  a.Q_rot.resize(3, n);
  for (int i = 0; i < n; ++i) {
    const auto& r = m.rotors[i];
    a.Q_tran.col(i) = r.direction;
    Vec3 v = r.position.cross(r.direction);
    if (include_counter_torque) v += r.sigma * r.direction;
    a.Q_rot.col(i) = v;
  }
  a.Q.resize(6, n);
  a.Q.topRows(3) = a.Q_tran;
  a.Q.bottomRows(3) = a.Q_rot;
  return a;
}

// Torque generators seen by the feasibility metrics and the simulator:
// counter-torque included when the airframe asks for it.
inline std::vector<Vec3> torque_generators(const AirframeModel& m) {
  std::vector<Vec3> v;
  v.reserve(m.rotors.size());
  for (const auto& r : m.rotors) {
    Vec3 g = r.position.cross(r.direction);
    if (m.counter_torque) g += r.sigma * r.direction;
    v.push_back(g);
  }
  return v;
}

inline WrenchVector wrench_from_thrusts(const AllocationMatrices& a, const VecX& lambda,
                                        Frame frame = Frame::CoG) {
  if (lambda.size() != a.Q_tran.cols()) {
    throw std::invalid_argument("wrench_from_thrusts: thrust count mismatch");
  }
  return {a.Q_tran * lambda, a.Q_rot * lambda, frame};
}

struct RankDeficient : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NoStaticHover : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SingularFrame : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SingularAllocation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Minimum-norm thrusts realizing a 6-DoF wrench. Unclamped; actuator
// saturation is applied once, in the simulator.
inline VecX allocate_fully_actuated(const AllocationMatrices& a, const WrenchVector& w) {
  Eigen::JacobiSVD<MatX> svd(a.Q, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VecX& sv = svd.singularValues();
  if (sv.size() < 6 || sv(sv.size() - 1) <= 1e-10 * sv(0)) {
    throw RankDeficient("allocation matrix rank < 6");
  }
  VecX w6(6);
  w6 << w.force, w.torque;
  return svd.solve(w6);
}

// Tilted hover frame {C}: uniform static thrust lambda_s and the minimal
// rotation R_C that takes the resulting force onto the vertical.
struct TiltedFrame {
  double lambda_s = 0.0;       // N per rotor
  Mat3 R_C = Mat3::Identity(); // {CoG} -> {C}
  MatX Q_tran_p;               // R_C * Q_tran
  MatX Q_rot_p;                // R_C * Q_rot
  double residual_torque = 0.0;  // N m, |lambda_s * Q_rot * 1|
};

inline TiltedFrame static_thrust_frame(const AirframeModel& m,
                                       double max_residual_torque = 0.05) {
  if (m.rotor_count() != 4) {
    throw std::invalid_argument("static_thrust_frame: needs exactly 4 rotors");
  }
  const AllocationMatrices a = build_allocation(m);
  const VecX ones = VecX::Ones(4);
  const Vec3 f_dir = a.Q_tran * ones;
  if (f_dir.norm() < 1e-9) {
    throw NoStaticHover("net thrust direction vanishes under uniform thrust");
  }
  TiltedFrame t;
  t.lambda_s = m.mass * m.gravity / f_dir.norm();
  t.residual_torque = t.lambda_s * (a.Q_rot * ones).norm();
  if (t.residual_torque > max_residual_torque) {
    throw NoStaticHover("uniform thrust leaves unbalanced torque");
  }
  if (f_dir.normalized().z() < std::cos(kPi - 0.0175)) {
    throw SingularFrame("thrust direction antiparallel to vertical");
  }
  t.R_C = minimal_rotation(f_dir, Vec3::UnitZ());
  t.Q_tran_p = t.R_C * a.Q_tran;
  t.Q_rot_p = t.R_C * a.Q_rot;
  return t;
}

inline VecX static_thrust_vector(const TiltedFrame& t) {
  return VecX::Constant(4, t.lambda_s);
}

// 4x4 allocation for the under-actuated unit: collective z-force in {C}
// stacked over the three torque rows.
struct QuadAllocation {
  Eigen::Matrix4d A = Eigen::Matrix4d::Zero();
  Eigen::Matrix4d A_inv = Eigen::Matrix4d::Zero();
};

inline QuadAllocation quad_allocation(const TiltedFrame& t) {
  QuadAllocation q;
  q.A.row(0) = t.Q_tran_p.row(2);
  q.A.bottomRows(3) = t.Q_rot_p;
  Eigen::JacobiSVD<Eigen::Matrix4d> svd(q.A, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv(3) <= 0.0 || sv(0) / sv(3) > 1e6) {
    throw SingularAllocation("quad allocation ill-conditioned");
  }
  q.A_inv = q.A.inverse();
  return q;
}

inline Eigen::Vector4d allocate_under_actuated(const QuadAllocation& q, double f_z,
                                               const Vec3& torque) {
  Eigen::Vector4d rhs;
  rhs << f_z, torque;
  return q.A_inv * rhs;
}

}  // namespace tiltdock
