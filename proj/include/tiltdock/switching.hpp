#pragma once

// Model-switch thrust transition.
//
// When the control model changes (unit ↔ assembled) the new controller's
// demanded total thrust can jump.  The blend rescales the new controller's
// output so the total starts at the captured pre-switch value and converges
// to the raw demand with weight W(t) = 1 − 1/(a·t + 1), t counted in control
// ticks (0.025 s each): W(120) ≈ 0.99 after about three seconds.

#include <cmath>
#include <stdexcept>

#include "tiltdock/core.hpp"

namespace tiltdock {

class SwitchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline double transition_weight(double t, double a = 0.9) {
  if (t < 0 || a <= 0) throw std::invalid_argument("transition_weight: need t >= 0, a > 0");
  return 1.0 - 1.0 / (a * t + 1.0);
}

struct TransitionState {
  double S_unit = 0.0;  // total thrust captured at the switch instant
  double a = 0.9;       // convergence rate per tick
  double t = 0.0;       // ticks elapsed since the switch
  bool active = false;
  bool held = false;    // last call had zero demand and returned the held output
  VecX last_output;
  double last_weight = 0.0;
  double last_scale = 1.0;
};

// Capture the total thrust at the instant of the switch.  Integrator carry-over
// happens in the controller stack; this records only the blend constant.
inline TransitionState begin_switch(const VecX& prev_thrusts, double a = 0.9) {
  if (!prev_thrusts.allFinite()) throw SwitchError("pre-switch thrusts not finite");
  const double total = prev_thrusts.cwiseAbs().sum();
  if (total <= 0.0) throw SwitchError("pre-switch total thrust must be positive");
  TransitionState ts;
  ts.S_unit = total;
  ts.a = a;
  ts.active = true;
  ts.last_output = VecX::Zero(prev_thrusts.size());
  return ts;
}

// One control tick of the blend: λ_trans = (S_trans/S_assem)·λ_des with
// S_trans = W·S_assem + (1 − W)·S_unit.  Deactivates once W > 0.995.
inline VecX transition_scale(const VecX& lambda_des, TransitionState& ts) {
  if (!ts.active) {
    ts.last_weight = 1.0;
    ts.last_scale = 1.0;
    ts.held = false;
    return lambda_des;
  }
  const double w = transition_weight(ts.t, ts.a);
  if (w > 0.995) {
    ts.active = false;
    ts.last_weight = w;
    ts.last_scale = 1.0;
    ts.held = false;
    return lambda_des;
  }
  const double s_assem = lambda_des.cwiseAbs().sum();
  if (s_assem <= 1e-12) {
    ts.held = true;
    return ts.last_output;
  }
  const double s_trans = w * s_assem + (1.0 - w) * ts.S_unit;
  const double scale = s_trans / s_assem;
  ts.last_weight = w;
  ts.last_scale = scale;
  ts.held = false;
  ts.last_output = scale * lambda_des;
  ts.t += 1.0;
  return ts.last_output;
}

}  // namespace tiltdock
