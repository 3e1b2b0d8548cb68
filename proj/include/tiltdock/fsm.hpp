#pragma once

// Docking / undocking state machine.
//
// Two units: the "female" holds pose, the "male" is steered relative to her
// control frame {F}.  Condition #1 gates whether the lateral/heading errors
// are safe enough to close in; condition #2 decides the pair is within
// capture range.  The join command is only ever emitted while #2 holds.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "tiltdock/core.hpp"

namespace tiltdock {

enum class FsmStateId : std::uint8_t {
  Standby,
  Approach,
  Assembly,
  Transition,
  Hovering,
  Disassembly,
};

inline const char* to_string(FsmStateId s) {
  switch (s) {
    case FsmStateId::Standby: return "standby";
    case FsmStateId::Approach: return "approach";
    case FsmStateId::Assembly: return "assembly";
    case FsmStateId::Transition: return "transition";
    case FsmStateId::Hovering: return "hovering";
    case FsmStateId::Disassembly: return "disassembly";
  }
  return "?";
}

struct Tolerances {
  double e1_y = 0.02;    // m
  double e1_z = 0.02;    // m
  double e1_psi = 0.13;  // rad
  double e2_x = 0.005;   // m
  double e2_y = 0.01;    // m
  double e2_z = 0.01;    // m
  double e2_psi = 0.01;  // rad
  double d_st = 0.6;     // standby separation, m
  double x_dock = 0.6;   // docked CoG separation, m

  void validate() const {
    for (double v : {e1_y, e1_z, e1_psi, e2_x, e2_y, e2_z, e2_psi, d_st, x_dock}) {
      if (!(v > 0)) throw std::invalid_argument("tolerances must be positive");
    }
    if (e2_y > e1_y || e2_z > e1_z || e2_psi > e1_psi) {
      throw std::invalid_argument("capture bounds must not exceed safety bounds");
    }
  }
};

// Male pose observed in the female control frame {F}.
struct RelativePose {
  Vec3 r = Vec3::Zero();
  double psi = 0.0;  // wrapped to (-pi, pi]
};

struct StandbyTarget {
  Vec3 position;
  double yaw;
};

inline StandbyTarget standby_targets(const Tolerances& tol) {
  return {Vec3(tol.d_st, 0, 0), -kPi};
}

enum class ConditionId { Safe, Capture };  // #1 and #2

inline bool condition_check(const RelativePose& rel, const Tolerances& tol, ConditionId which) {
  const double yaw_err = std::abs(wrap_pi(rel.psi + kPi));  // target heading is -pi
  const bool safe = std::abs(rel.r.y()) <= tol.e1_y && std::abs(rel.r.z()) <= tol.e1_z &&
                    yaw_err <= tol.e1_psi;
  if (which == ConditionId::Safe) return safe;
  return std::abs(rel.r.x() - tol.x_dock) <= tol.e2_x && std::abs(rel.r.y()) <= tol.e2_y &&
         std::abs(rel.r.z()) <= tol.e2_z && yaw_err <= tol.e2_psi;
}

struct FsmInputs {
  RelativePose rel;
  bool joint_locked = false;       // mechanical joint reports rigid
  bool transition_done = false;    // thrust blend reports W > 0.995
  bool disassembly_request = false;
};

struct FsmCommands {
  Vec3 male_target = Vec3::Zero();  // in {F}
  double male_yaw = -kPi;
  bool female_hold = true;
  bool actuate_dock = false;     // drive the capture mechanism (join)
  bool actuate_release = false;
  bool begin_switch_assembled = false;  // fire the model switch, one tick only
  bool begin_switch_unit = false;
};

struct FsmEvent {
  double time = 0.0;
  FsmStateId state = FsmStateId::Standby;
  bool cond_safe = false;
  bool cond_capture = false;
  std::string note;
};

class DockingFsm {
 public:
  explicit DockingFsm(Tolerances tol = {}, double tick_period = 0.1,
                      FsmStateId start = FsmStateId::Standby)
      : tol_(tol), dt_(tick_period), state_(start) {
    tol_.validate();
    if (dt_ <= 0) throw std::invalid_argument("fsm tick period must be positive");
    approach_x_ = tol_.d_st;
  }

  FsmStateId state() const { return state_; }
  double time() const { return time_; }
  const std::vector<FsmEvent>& events() const { return events_; }
  const Tolerances& tolerances() const { return tol_; }

  // One 10 Hz tick.  Deterministic in the observation stream.
  FsmCommands step(const FsmInputs& in) {
    const bool safe = condition_check(in.rel, tol_, ConditionId::Safe);
    const bool capture = condition_check(in.rel, tol_, ConditionId::Capture);
    FsmCommands cmd;
    cmd.male_target = standby_targets(tol_).position;

    switch (state_) {
      case FsmStateId::Standby:
        if (safe) enter(FsmStateId::Approach, in, "safety condition met");
        break;

      case FsmStateId::Approach:
        if (!safe) {
          enter(FsmStateId::Standby, in, "safety condition lost");
          break;
        }
        if (capture) {
          enter(FsmStateId::Assembly, in, "capture condition met");
          // The dock command fires on the entry tick: #2 was verified true
          // this very tick, and alignment windows are too brief to spend a
          // tick idling in Assembly before actuating.
          cmd.male_target = Vec3(tol_.x_dock, 0, 0);
          cmd.actuate_dock = true;
          break;
        }
        approach_x_ = std::max(tol_.x_dock, approach_x_ - kApproachSpeed * dt_);
        cmd.male_target = Vec3(approach_x_, 0, 0);
        break;

      case FsmStateId::Assembly:
        if (in.joint_locked) {
          cmd.begin_switch_assembled = true;
          direction_assembled_ = true;
          enter(FsmStateId::Transition, in, "joint locked");
          break;
        }
        if (!capture) {
          enter(FsmStateId::Approach, in, "capture condition lost");
          break;
        }
        if (time_in_state_ > kDockTimeout) {
          enter(FsmStateId::Approach, in, "dock actuation timeout");
          break;
        }
        cmd.male_target = Vec3(tol_.x_dock, 0, 0);
        cmd.actuate_dock = true;  // emitted only while #2 holds
        break;

      case FsmStateId::Transition:
        if (in.transition_done) {
          enter(direction_assembled_ ? FsmStateId::Hovering : FsmStateId::Disassembly, in,
                "thrust blend converged");
        }
        break;

      case FsmStateId::Hovering:
        if (in.disassembly_request) {
          cmd.begin_switch_unit = true;
          direction_assembled_ = false;
          enter(FsmStateId::Transition, in, "disassembly requested");
        }
        break;

      case FsmStateId::Disassembly:
        cmd.actuate_release = true;
        cmd.male_target = Vec3(tol_.d_st, 0, 0);
        if (!in.joint_locked && in.rel.r.x() >= tol_.d_st - 0.05) {
          approach_x_ = tol_.d_st;
          enter(FsmStateId::Standby, in, "separation restored");
        }
        break;
    }

    time_ += dt_;
    time_in_state_ += dt_;
    return cmd;
  }

  static constexpr double kApproachSpeed = 0.1;  // m/s along -x in {F}
  static constexpr double kDockTimeout = 5.0;    // s in Assembly without a joint

 private:
  void enter(FsmStateId next, const FsmInputs& in, const char* why) {
    FsmEvent ev;
    ev.time = time_;
    ev.state = next;
    ev.cond_safe = condition_check(in.rel, tol_, ConditionId::Safe);
    ev.cond_capture = condition_check(in.rel, tol_, ConditionId::Capture);
    ev.note = why;
    events_.push_back(std::move(ev));
    state_ = next;
    time_in_state_ = 0.0;
    if (next == FsmStateId::Approach) {
      approach_x_ = std::min(tol_.d_st, std::max(tol_.x_dock, in.rel.r.x()));
    }
  }

  Tolerances tol_;
  double dt_;
  FsmStateId state_;
  double time_ = 0.0;
  double time_in_state_ = 0.0;
  double approach_x_;
  bool direction_assembled_ = true;
  std::vector<FsmEvent> events_;
};

}  // namespace tiltdock
