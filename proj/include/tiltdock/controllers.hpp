#pragma once

// Closed-loop controller stacks assembled from the control primitives.
//
// The unit stack flies an under-actuated tilted quad: a position PID produces
// a desired force in the yaw-aligned frame, the attitude pipeline converts it
// into roll/pitch targets plus a collective thrust share, and the LQI
// regulator adds the attitude thrust on top.  The assembled stack flies a
// rank-6 craft: position and attitude PIDs produce a full wrench that the
// pseudoinverse allocator maps to per-rotor thrusts.  Both stacks expose
// their integrator state so a model switch can carry it over instead of
// resetting it.

#include <stdexcept>

#include "tiltdock/airframe.hpp"
#include "tiltdock/alloc.hpp"
#include "tiltdock/control.hpp"
#include "tiltdock/core.hpp"
#include "tiltdock/sim.hpp"

namespace tiltdock {

inline constexpr double kControlPeriod = 0.025;  // s, 40 Hz

struct TrackingTarget {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  double yaw = 0.0;
};

// Evaluate the combined body's rigid state at a constituent unit's CoG.
inline Observation unit_observation(const Observation& combined, const Vec3& offset,
                                    const Mat3& relative_rotation) {
  Observation o;
  o.time = combined.time;
  o.position = combined.position + combined.rotation * offset;
  o.velocity = combined.velocity + combined.rotation * combined.omega.cross(offset);
  o.rotation = combined.rotation * relative_rotation;
  o.omega = relative_rotation.transpose() * combined.omega;
  return o;
}

// ---------------------------------------------------------------------------
// Under-actuated unit stack

struct UnitControllerConfig {
  PidGains position{Vec3(6.0, 6.0, 8.0), Vec3(1.5, 1.5, 3.0), Vec3(4.8, 4.8, 5.5)};
  double position_integral_limit = 5.0;  // m s
  double attitude_integral_limit = 2.0;  // rad s
  VecX lqi_state_weight;                 // empty -> library default
  VecX lqi_w1;                           // empty -> ones
  Vec3 lqi_w2 = Vec3::Ones();
  double dt = kControlPeriod;
};

struct AttitudeDebug {
  double roll_target = 0.0;
  double pitch_target = 0.0;
  double f_z = 0.0;
  bool thrust_too_low = false;
};

class UnitController {
 public:
  UnitController(const AirframeModel& model, const UnitControllerConfig& cfg = {})
      : model_(model), cfg_(cfg), frame_(static_thrust_frame(model)) {
    cfg_.position.validate();
    if (cfg_.dt <= 0) throw std::invalid_argument("unit controller: dt must be positive");
    const VecX mw = cfg_.lqi_state_weight.size() ? cfg_.lqi_state_weight
                                                 : default_lqi_state_weight();
    const VecX w1 = cfg_.lqi_w1.size() ? cfg_.lqi_w1 : VecX::Ones(model.rotor_count());
    lqi_ = build_lqi(model_, frame_, mw, w1, cfg_.lqi_w2);
    pos_state_.integral_limit = cfg_.position_integral_limit;
  }

  const AirframeModel& model() const { return model_; }
  const TiltedFrame& frame() const { return frame_; }
  const LqiDesign& lqi() const { return lqi_; }
  const AttitudeDebug& debug() const { return debug_; }

  void set_target(const TrackingTarget& t) { target_ = t; }
  const TrackingTarget& target() const { return target_; }

  PidState& position_state() { return pos_state_; }
  Vec3& attitude_integral() { return att_integral_; }

  // One 40 Hz tick: observation in, commanded per-rotor thrusts out.
  VecX tick(const Observation& obs) {
    const double m = model_.mass;
    const double g = model_.gravity;

    // Attitude of the tilted control frame in the world, split into yaw and
    // residual roll/pitch.
    const Mat3 R_wc = obs.rotation * frame_.R_C.transpose();
    const EulerZyx eul = euler_zyx(R_wc);
    const Mat3 R_yaw = rot_z(eul.yaw);
    const Mat3 R_resid = R_yaw.transpose() * R_wc;

    // Desired force in the yaw-aligned frame; gravity enters as feedforward.
    const Vec3 e_r = target_.position - obs.position;
    const Vec3 e_v = target_.velocity - obs.velocity;
    Vec3 f_des = pid_position(e_r, e_v, cfg_.position, pos_state_, R_yaw, m, cfg_.dt);
    f_des += m * g * Vec3::UnitZ();

    AttitudeTarget at;
    debug_.thrust_too_low = false;
    try {
      at = underactuated_position_pipeline(f_des, R_resid, frame_, m);
    } catch (const ThrustTooLow&) {
      // Degenerate demand (e.g. commanded free fall): hold level and track
      // the collective component only.
      at.roll = 0.0;
      at.pitch = 0.0;
      at.f_z = (R_resid * Vec3::UnitZ()).dot(f_des);
      at.lambda_z = (at.f_z / (m * g)) * static_thrust_vector(frame_);
      debug_.thrust_too_low = true;
    }
    debug_.roll_target = at.roll;
    debug_.pitch_target = at.pitch;
    debug_.f_z = at.f_z;

    // Attitude errors (actual minus target) and rates in the control frame.
    const Vec3 w_c = frame_.R_C * obs.omega;
    const Vec3 e_att(wrap_pi(eul.roll - at.roll), wrap_pi(eul.pitch - at.pitch),
                     wrap_pi(eul.yaw - target_.yaw));
    att_integral_ += e_att * cfg_.dt;
    att_integral_ = att_integral_.cwiseMax(-cfg_.attitude_integral_limit)
                        .cwiseMin(cfg_.attitude_integral_limit);

    VecX x(kLqiStateDim);
    x << e_att.x(), w_c.x(), e_att.y(), w_c.y(), e_att.z(), w_c.z(),
        att_integral_.x(), att_integral_.y(), att_integral_.z();

    return at.lambda_z + lqi_attitude_output(x, lqi_, w_c);
  }

 private:
  AirframeModel model_;
  UnitControllerConfig cfg_;
  TiltedFrame frame_;
  LqiDesign lqi_;
  TrackingTarget target_;
  PidState pos_state_;
  Vec3 att_integral_ = Vec3::Zero();
  AttitudeDebug debug_;
};

// ---------------------------------------------------------------------------
// Fully-actuated assembled stack

struct AssembledControllerConfig {
  PidGains position{Vec3(8.0, 8.0, 8.0), Vec3(2.0, 2.0, 3.0), Vec3(5.5, 5.5, 5.5)};
  PidGains attitude{Vec3(100.0, 100.0, 100.0), Vec3(20.0, 20.0, 20.0), Vec3(20.0, 20.0, 20.0)};
  double position_integral_limit = 5.0;
  double attitude_integral_limit = 1.0;
  double dt = kControlPeriod;
};

class AssembledController {
 public:
  AssembledController(const AirframeModel& model, const AssembledControllerConfig& cfg = {})
      : model_(model), cfg_(cfg), alloc_(build_allocation(model)) {
    cfg_.position.validate();
    cfg_.attitude.validate();
    if (cfg_.dt <= 0) throw std::invalid_argument("assembled controller: dt must be positive");
    pos_state_.integral_limit = cfg_.position_integral_limit;
    att_state_.integral_limit = cfg_.attitude_integral_limit;
    // Fail fast on rank-deficient craft.
    allocate_fully_actuated(alloc_, WrenchVector{});
  }

  const AirframeModel& model() const { return model_; }
  void set_target(const TrackingTarget& t) { target_ = t; }
  const TrackingTarget& target() const { return target_; }

  PidState& position_state() { return pos_state_; }
  PidState& attitude_state() { return att_state_; }

  // Last commanded body torque, for telemetry.
  const Vec3& last_torque() const { return last_torque_; }

  VecX tick(const Observation& obs) {
    const double m = model_.mass;
    const Vec3 e_r = target_.position - obs.position;
    const Vec3 e_v = target_.velocity - obs.velocity;
    Vec3 f_body = pid_position(e_r, e_v, cfg_.position, pos_state_, obs.rotation, m, cfg_.dt);
    f_body += m * model_.gravity * (obs.rotation.transpose() * Vec3::UnitZ());

    const Mat3 R_des = rot_z(target_.yaw);
    const Mat3 Re = R_des.transpose() * obs.rotation;
    const Vec3 e_rot = 0.5 * vee(Re - Re.transpose());  // actual minus desired
    const Vec3 tau = pid_attitude(-e_rot, -obs.omega, cfg_.attitude, att_state_,
                                  model_.inertia, obs.omega, cfg_.dt);
    last_torque_ = tau;

    WrenchVector w;
    w.force = f_body;
    w.torque = tau;
    return allocate_fully_actuated(alloc_, w);
  }

 private:
  AirframeModel model_;
  AssembledControllerConfig cfg_;
  AllocationMatrices alloc_;
  TrackingTarget target_;
  PidState pos_state_;
  PidState att_state_;
  Vec3 last_torque_ = Vec3::Zero();
};

// ---------------------------------------------------------------------------
// Integrator carry-over across model switches.

inline void carry_integrals(const PidState& unit_a, const PidState& unit_b,
                            AssembledController& to) {
  to.position_state().integral = 0.5 * (unit_a.integral + unit_b.integral);
}

inline void carry_integrals(const PidState& assembled, UnitController& to) {
  to.position_state().integral = assembled.integral;
}

}  // namespace tiltdock
