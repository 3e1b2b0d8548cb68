#pragma once

// Flight control laws.
//
// Fully-actuated flight uses plain position/attitude PID feeding the 6-DOF
// allocator.  Under-actuated flight converts the desired force into roll and
// pitch targets plus a collective thrust along the tilted hover axis, and
// regulates posture with an LQI controller whose input cost penalises the
// translational force produced by the attitude effort.

#include <cmath>
#include <stdexcept>
#include <utility>

#include "tiltdock/airframe.hpp"
#include "tiltdock/alloc.hpp"
#include "tiltdock/riccati.hpp"

namespace tiltdock {

class ThrustTooLow : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class WeightError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// PID

struct PidGains {
  Vec3 kp = Vec3::Zero();  // diagonal entries
  Vec3 ki = Vec3::Zero();
  Vec3 kd = Vec3::Zero();

  void validate() const {
    if ((kp.array() < 0).any() || (ki.array() < 0).any() || (kd.array() < 0).any()) {
      throw std::invalid_argument("pid gains must be nonnegative");
    }
  }
};

struct PidState {
  Vec3 integral = Vec3::Zero();
  double integral_limit = 1e9;  // per-axis |∫e| clamp

  void accumulate(const Vec3& error, double dt) {
    integral += error * dt;
    integral = integral.cwiseMax(-integral_limit).cwiseMin(integral_limit);
  }
};

// Desired force in the caller's control frame: f = m·Rᵀ(Kp e + Ki ∫e + Kd ė),
// with R the control frame's attitude in the world and e the world-frame
// position error.  No gravity feedforward — the integral absorbs it.
inline Vec3 pid_position(const Vec3& e_r, const Vec3& e_dot, const PidGains& gains,
                         PidState& state, const Mat3& R, double mass, double dt) {
  if (dt <= 0) throw std::invalid_argument("pid_position: dt must be positive");
  state.accumulate(e_r, dt);
  const Vec3 accel = gains.kp.cwiseProduct(e_r) + gains.ki.cwiseProduct(state.integral) +
                     gains.kd.cwiseProduct(e_dot);
  return mass * (R.transpose() * accel);
}

// τ = I·(Kp e + Ki ∫e + Kd ė) + ω × Iω, everything in the control frame.
inline Vec3 pid_attitude(const Vec3& e_att, const Vec3& e_dot, const PidGains& gains,
                         PidState& state, const Mat3& inertia, const Vec3& omega, double dt) {
  if (dt <= 0) throw std::invalid_argument("pid_attitude: dt must be positive");
  state.accumulate(e_att, dt);
  const Vec3 accel = gains.kp.cwiseProduct(e_att) + gains.ki.cwiseProduct(state.integral) +
                     gains.kd.cwiseProduct(e_dot);
  return inertia * accel + omega.cross(inertia * omega);
}

// ---------------------------------------------------------------------------
// Under-actuated position → attitude pipeline

struct AttitudeTarget {
  double roll = 0.0;
  double pitch = 0.0;
  double f_z = 0.0;    // collective along the craft's current thrust axis
  VecX lambda_z;       // hover-direction thrust share
};

// f_des is the desired force in the yaw-aligned control frame; R is the craft's
// residual roll/pitch attitude within that frame (identity when level).
inline AttitudeTarget underactuated_position_pipeline(const Vec3& f_des, const Mat3& R,
                                                      const TiltedFrame& frame, double mass) {
  if (f_des.norm() <= 0.1 * mass * kGravity) {
    throw ThrustTooLow("desired force too small for attitude extraction");
  }
  AttitudeTarget out;
  out.roll = std::atan2(-f_des.y(), std::hypot(f_des.x(), f_des.z()));
  out.pitch = std::atan2(f_des.x(), f_des.z());
  out.f_z = (R * Vec3::UnitZ()).dot(f_des);
  out.lambda_z = (out.f_z / (mass * kGravity)) * static_thrust_vector(frame);
  return out;
}

// ---------------------------------------------------------------------------
// LQI posture controller
//
// State x = [e_r, ė_r, e_p, ė_p, e_y, ė_y, ∫e_r, ∫e_p, ∫e_y] (errors of roll,
// pitch, yaw of the control frame).  Since x holds errors, the thrust input
// enters the ė rows with a negative sign; the gyroscopic disturbance
// I⁻¹(ω × Iω) enters them positively through D.

inline constexpr int kLqiStateDim = 9;

struct LqiSystem {
  MatX A;  // 9×9
  MatX B;  // 9×n
  MatX C;  // 9×9 output selector (identity: full-state feedback)
  MatX D;  // 9×3 disturbance injection
};

inline LqiSystem build_lqi_system(const AirframeModel& model, const TiltedFrame& frame) {
  const Mat3 inertia_c = frame.R_C * model.inertia * frame.R_C.transpose();
  const MatX gain = -(inertia_c.inverse() * frame.Q_rot_p);

  LqiSystem sys;
  sys.A = MatX::Zero(kLqiStateDim, kLqiStateDim);
  sys.A(0, 1) = sys.A(2, 3) = sys.A(4, 5) = 1.0;  // d e/dt = ė
  sys.A(6, 0) = sys.A(7, 2) = sys.A(8, 4) = 1.0;  // d ∫e/dt = e
  sys.B = MatX::Zero(kLqiStateDim, gain.cols());
  sys.B.row(1) = gain.row(0);
  sys.B.row(3) = gain.row(1);
  sys.B.row(5) = gain.row(2);
  sys.C = MatX::Identity(kLqiStateDim, kLqiStateDim);
  sys.D = MatX::Zero(kLqiStateDim, 3);
  sys.D(1, 0) = sys.D(3, 1) = sys.D(5, 2) = 1.0;
  return sys;
}

// N = W₁ + Q_tran′ᵀ W₂ Q_tran′: λᵀNλ adds ‖√W₂·Q_tran′λ‖², the squared
// translational force the attitude effort leaks into the craft.
inline MatX lqi_weight_N(const VecX& w1, const Vec3& w2, const MatX& q_tran_p) {
  if (w1.size() != q_tran_p.cols()) throw WeightError("W1 size mismatch");
  if ((w1.array() <= 0).any()) throw WeightError("W1 entries must be positive");
  if ((w2.array() < 0).any()) throw WeightError("W2 entries must be nonnegative");
  MatX n = MatX(w1.asDiagonal());
  n += q_tran_p.transpose() * w2.asDiagonal() * q_tran_p;
  if (Eigen::LLT<MatX>(n).info() != Eigen::Success) {
    throw WeightError("weight matrix N is not positive-definite");
  }
  return n;
}

inline VecX default_lqi_state_weight() {
  VecX m(kLqiStateDim);
  m << 10, 1, 10, 1, 10, 1, 5, 5, 5;
  return m;
}

struct LqiGain {
  MatX K;
  MatX P;
  double residual = 0.0;
};

inline LqiGain solve_lqi_gain(const MatX& A, const MatX& B, const MatX& M, const MatX& N) {
  LqiGain g;
  CareSolution sol;
  try {
    g.K = lqr_gain(A, B, M, N, &sol);
  } catch (const RiccatiError&) {
    throw;
  }
  g.P = std::move(sol.P);
  g.residual = sol.residual;
  return g;
}

struct LqiDesign {
  LqiSystem sys;
  MatX M;  // state weight
  MatX N;  // input weight
  MatX K;  // 4×9 feedback gain
  MatX P;
  double riccati_residual = 0.0;
  Mat3 inertia_c = Mat3::Identity();  // inertia in the control frame
  MatX q_rot_pinv;                    // for the gyroscopic feedforward
};

inline LqiDesign build_lqi(const AirframeModel& model, const TiltedFrame& frame,
                           const VecX& state_weight, const VecX& w1, const Vec3& w2) {
  LqiDesign d;
  d.sys = build_lqi_system(model, frame);
  if (state_weight.size() != kLqiStateDim) throw WeightError("state weight must have 9 entries");
  d.M = MatX(state_weight.asDiagonal());
  d.N = lqi_weight_N(w1, w2, frame.Q_tran_p);
  LqiGain g = solve_lqi_gain(d.sys.A, d.sys.B, d.M, d.N);
  d.K = std::move(g.K);
  d.P = std::move(g.P);
  d.riccati_residual = g.residual;
  d.inertia_c = frame.R_C * model.inertia * frame.R_C.transpose();
  d.q_rot_pinv = pinv(frame.Q_rot_p);
  return d;
}

inline LqiDesign build_lqi(const AirframeModel& model, const TiltedFrame& frame) {
  return build_lqi(model, frame, default_lqi_state_weight(),
                   VecX::Ones(frame.Q_tran_p.cols()), Vec3::Ones());
}

// λ_rot = Kx + Q_rot′⁺(ω × Iω); ω and I expressed in the control frame.
inline VecX lqi_attitude_output(const VecX& x, const LqiDesign& design, const Vec3& omega) {
  if (x.size() != kLqiStateDim) throw std::invalid_argument("lqi state must have 9 entries");
  return design.K * x + design.q_rot_pinv * omega.cross(design.inertia_c * omega);
}

inline VecX lqi_attitude_output(const VecX& x, const MatX& K, const TiltedFrame& frame,
                                const Vec3& omega, const Mat3& inertia_c) {
  if (x.size() != kLqiStateDim) throw std::invalid_argument("lqi state must have 9 entries");
  return K * x + pinv(frame.Q_rot_p) * omega.cross(inertia_c * omega);
}

}  // namespace tiltdock
