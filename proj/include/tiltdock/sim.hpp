#pragma once

// Deterministic rigid-body world.
//
// Bodies are integrated with RK4: translation in world coordinates, rotation
// on the rotation group through an incremental exponential-map update (the
// stage rates use the inverse right-Jacobian so the scheme keeps fourth order
// on SO(3)).  Thrust commands are clamped to [0, max_thrust] here and nowhere
// else; the plant wrench always comes from the error-injected "actual" model
// while controllers only ever see the nominal one.  Docking replaces two
// bodies by their rigid composition with the pair's linear and angular
// momentum preserved exactly; undocking evaluates the combined body's rigid
// velocity field at each unit's centre of mass.

#include <cstdint>
#include <deque>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tiltdock/airframe.hpp"
#include "tiltdock/alloc.hpp"
#include "tiltdock/core.hpp"
#include "tiltdock/rng.hpp"

namespace tiltdock {

class SimDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CaptureMiss : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BodyState {
  Vec3 position = Vec3::Zero();      // world, m
  Vec3 velocity = Vec3::Zero();      // world, m/s
  Mat3 rotation = Mat3::Identity();  // body -> world
  Vec3 omega = Vec3::Zero();         // body frame, rad/s

  bool finite() const {
    return position.allFinite() && velocity.allFinite() && rotation.allFinite() &&
           omega.allFinite();
  }
};

// Plant-side parameter error: the simulated body flies with these factors
// applied while the controller keeps the nominal model.
struct ModelErrorInjection {
  double mass_scale = 1.0;
  double inertia_scale = 1.0;
  VecX thrust_gain;  // per rotor; empty means unity

  void validate(int rotor_count) const {
    auto in_band = [](double v) { return v >= 0.5 && v <= 1.5; };
    if (!in_band(mass_scale) || !in_band(inertia_scale)) {
      throw std::invalid_argument("model error factors must lie in [0.5, 1.5]");
    }
    if (thrust_gain.size() != 0 && thrust_gain.size() != rotor_count) {
      throw std::invalid_argument("thrust gain vector must match rotor count");
    }
    for (int i = 0; i < thrust_gain.size(); ++i) {
      if (!in_band(thrust_gain(i))) {
        throw std::invalid_argument("model error factors must lie in [0.5, 1.5]");
      }
    }
  }

  AirframeModel apply(const AirframeModel& nominal) const {
    AirframeModel m = nominal;
    m.mass *= mass_scale;
    m.inertia *= inertia_scale;
    return m;
  }

  VecX gains(int rotor_count) const {
    return thrust_gain.size() ? thrust_gain : VecX::Ones(rotor_count);
  }
};

struct RigidBody {
  int id = -1;
  AirframeModel nominal;  // what the controller believes
  AirframeModel actual;   // what the plant obeys
  VecX thrust_gain;       // actuation gain per rotor
  BodyState state;
  VecX thrust_cmd;          // latest commanded thrusts, unclamped
  Vec3 ext_force_world = Vec3::Zero();
  Vec3 ext_torque_body = Vec3::Zero();

  Vec3 linear_momentum() const { return actual.mass * state.velocity; }

  // Angular momentum in world coordinates about the given world point.
  Vec3 angular_momentum_about(const Vec3& point) const {
    const Vec3 spin = state.rotation * (actual.inertia * state.omega);
    return spin + actual.mass * (state.position - point).cross(state.velocity);
  }
};

// Record of a rigid docking joint so the pair can be split back apart.
struct DockJoint {
  int combined_id = -1;
  int female_id = -1;
  int male_id = -1;
  AirframeModel female_nominal, male_nominal;
  AirframeModel female_actual, male_actual;
  VecX female_gain, male_gain;
  Pose relative;            // male CoG pose in the female body frame
  Vec3 female_offset = Vec3::Zero();  // unit CoGs in the combined body frame
  Vec3 male_offset = Vec3::Zero();
};

namespace detail {

// d/dt of the incremental rotation vector: inverse right-Jacobian of phi
// applied to the body rate, truncated at second order (phi stays ~1e-3 rad
// within one step).
inline Vec3 rotation_rate(const Vec3& phi, const Vec3& omega) {
  return omega - 0.5 * phi.cross(omega) + (1.0 / 12.0) * phi.cross(phi.cross(omega));
}

struct BodyDeriv {
  Vec3 dr, dv, dphi, dw;
};

}  // namespace detail

// One RK4 step of a single rigid body under a fixed body-frame wrench.
// `force_body`/`torque_body` already include thrust effects; gravity and the
// external wrench are added here.
inline void integrate_body(RigidBody& b, const Vec3& force_body, const Vec3& torque_body,
                           double dt) {
  const double inv_m = 1.0 / b.actual.mass;
  const Mat3 I = b.actual.inertia;
  const Mat3 I_inv = I.inverse();
  const Vec3 g_acc(0.0, 0.0, -b.actual.gravity);
  const Mat3 R0 = b.state.rotation;

  auto deriv = [&](const Vec3& v, const Vec3& phi, const Vec3& w) {
    detail::BodyDeriv d;
    const Mat3 R = R0 * exp_so3(phi);
    d.dr = v;
    d.dv = inv_m * (R * force_body + b.ext_force_world) + g_acc;
    d.dphi = detail::rotation_rate(phi, w);
    d.dw = I_inv * (torque_body + b.ext_torque_body - w.cross(I * w));
    return d;
  };

  const Vec3 r0 = b.state.position, v0 = b.state.velocity, w0 = b.state.omega;
  const Vec3 phi0 = Vec3::Zero();

  const auto k1 = deriv(v0, phi0, w0);
  const auto k2 = deriv(v0 + 0.5 * dt * k1.dv, phi0 + 0.5 * dt * k1.dphi, w0 + 0.5 * dt * k1.dw);
  const auto k3 = deriv(v0 + 0.5 * dt * k2.dv, phi0 + 0.5 * dt * k2.dphi, w0 + 0.5 * dt * k2.dw);
  const auto k4 = deriv(v0 + dt * k3.dv, phi0 + dt * k3.dphi, w0 + dt * k3.dw);

  auto mix = [&](const Vec3& a1, const Vec3& a2, const Vec3& a3, const Vec3& a4) {
    return Vec3((dt / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4));
  };

  b.state.position = r0 + mix(k1.dr, k2.dr, k3.dr, k4.dr);
  b.state.velocity = v0 + mix(k1.dv, k2.dv, k3.dv, k4.dv);
  b.state.omega = w0 + mix(k1.dw, k2.dw, k3.dw, k4.dw);
  b.state.rotation = R0 * exp_so3(mix(k1.dphi, k2.dphi, k3.dphi, k4.dphi));
}

class World {
 public:
  explicit World(double dt = 0.001) : dt_(dt) {
    if (!(dt > 0.0 && dt <= 0.01)) {
      throw std::invalid_argument("world: dt must lie in (0, 0.01]");
    }
  }

  double dt() const { return dt_; }
  double time() const { return time_; }
  std::vector<RigidBody>& bodies() { return bodies_; }
  const std::vector<RigidBody>& bodies() const { return bodies_; }
  const std::vector<DockJoint>& joints() const { return joints_; }

  int add_body(const AirframeModel& nominal, const BodyState& state,
               const ModelErrorInjection& inject = {}) {
    nominal.validate();
    inject.validate(nominal.rotor_count());
    RigidBody b;
    b.id = next_id_++;
    b.nominal = nominal;
    b.actual = inject.apply(nominal);
    b.thrust_gain = inject.gains(nominal.rotor_count());
    b.state = state;
    b.thrust_cmd = VecX::Zero(nominal.rotor_count());
    bodies_.push_back(std::move(b));
    return bodies_.back().id;
  }

  bool has_body(int id) const { return find(id) >= 0; }

  RigidBody& body(int id) {
    const int k = find(id);
    if (k < 0) throw std::out_of_range("world: unknown body id");
    return bodies_[static_cast<size_t>(k)];
  }
  const RigidBody& body(int id) const {
    const int k = find(id);
    if (k < 0) throw std::out_of_range("world: unknown body id");
    return bodies_[static_cast<size_t>(k)];
  }

  void set_thrusts(int id, const VecX& lambda) {
    RigidBody& b = body(id);
    if (lambda.size() != b.nominal.rotor_count()) {
      throw std::invalid_argument("world: thrust count mismatch");
    }
    b.thrust_cmd = lambda;
  }

  // Saturate a command against the body's per-rotor limits.
  static VecX clamp_thrusts(const RigidBody& b, const VecX& lambda) {
    VecX out = lambda;
    for (int i = 0; i < out.size(); ++i) {
      const double hi = b.actual.rotors[static_cast<size_t>(i)].max_thrust;
      out(i) = std::min(std::max(out(i), 0.0), hi);
    }
    return out;
  }

  // Advance every body one physics step using its stored thrust command.
  void step() {
    for (RigidBody& b : bodies_) {
      const VecX lam = b.thrust_gain.cwiseProduct(clamp_thrusts(b, b.thrust_cmd));
      Vec3 f = Vec3::Zero(), tau = Vec3::Zero();
      for (int i = 0; i < lam.size(); ++i) {
        const auto& r = b.actual.rotors[static_cast<size_t>(i)];
        f += lam(i) * r.direction;
        Vec3 g = r.position.cross(r.direction);
        if (b.actual.counter_torque) g += r.sigma * r.direction;
        tau += lam(i) * g;
      }
      integrate_body(b, f, tau, dt_);
      if (!b.state.finite() || !std::isfinite(lam.sum())) {
        throw SimDiverged("body " + std::to_string(b.id) + " state became non-finite at t=" +
                          std::to_string(time_));
      }
    }
    time_ += dt_;
    if (++steps_since_renorm_ >= 1000) {
      for (RigidBody& b : bodies_) b.state.rotation = orthonormalize(b.state.rotation);
      steps_since_renorm_ = 0;
    }
  }

  Vec3 total_linear_momentum() const {
    Vec3 p = Vec3::Zero();
    for (const auto& b : bodies_) p += b.linear_momentum();
    return p;
  }

  Vec3 total_angular_momentum_about(const Vec3& point) const {
    Vec3 l = Vec3::Zero();
    for (const auto& b : bodies_) l += b.angular_momentum_about(point);
    return l;
  }

  // Rigidly join `male` onto `female` at the nominal docked pose.  The drogue
  // absorbs lateral tip misalignment up to `capture_lateral`; beyond that the
  // capture misses and the world is left untouched.
  int dock(int female_id, int male_id, double separation = kDockedSeparation,
           double capture_lateral = 0.025) {
    RigidBody f = body(female_id);
    RigidBody m = body(male_id);

    const Vec3 rel = f.state.rotation.transpose() * (m.state.position - f.state.position);
    const double lateral = std::hypot(rel.y(), rel.z());
    if (lateral > capture_lateral) {
      throw CaptureMiss("lateral misalignment " + std::to_string(lateral) + " m exceeds " +
                        std::to_string(capture_lateral) + " m");
    }

    const Pose relative = docked_pose(separation);
    DockJoint j;
    j.female_id = f.id;
    j.male_id = m.id;
    j.female_nominal = f.nominal;
    j.male_nominal = m.nominal;
    j.female_actual = f.actual;
    j.male_actual = m.actual;
    j.female_gain = f.thrust_gain;
    j.male_gain = m.thrust_gain;
    j.relative = relative;

    const AirframeModel combined_nominal = combined_model(f.nominal, m.nominal, relative);
    const AirframeModel combined_actual = combined_model(f.actual, m.actual, relative);

    const double mf = f.actual.mass, mm = m.actual.mass, mt = mf + mm;
    j.male_offset = relative.position - (mm / mt) * relative.position;
    j.female_offset = -(mm / mt) * relative.position;

    BodyState s;
    s.position = (mf * f.state.position + mm * m.state.position) / mt;
    s.velocity = (mf * f.state.velocity + mm * m.state.velocity) / mt;
    s.rotation = f.state.rotation;
    // About the (instantaneous) combined CoG the translational part of the
    // combined body's momentum vanishes, so the spin absorbs the pair's total.
    const Vec3 L = f.angular_momentum_about(s.position) + m.angular_momentum_about(s.position);
    s.omega = combined_actual.inertia.inverse() * (s.rotation.transpose() * L);

    RigidBody c;
    c.id = next_id_++;
    c.nominal = combined_nominal;
    c.actual = combined_actual;
    c.thrust_gain = VecX(f.thrust_gain.size() + m.thrust_gain.size());
    c.thrust_gain << f.thrust_gain, m.thrust_gain;
    c.state = s;
    c.thrust_cmd = VecX(f.thrust_cmd.size() + m.thrust_cmd.size());
    c.thrust_cmd << f.thrust_cmd, m.thrust_cmd;

    remove(female_id);
    remove(male_id);
    bodies_.push_back(std::move(c));
    j.combined_id = bodies_.back().id;
    joints_.push_back(j);
    return j.combined_id;
  }

  // Release the joint holding `combined_id`, restoring the two original
  // bodies with the combined body's rigid velocity field at their CoGs.
  std::pair<int, int> undock(int combined_id) {
    int ji = -1;
    for (size_t k = 0; k < joints_.size(); ++k) {
      if (joints_[k].combined_id == combined_id) ji = static_cast<int>(k);
    }
    if (ji < 0) throw std::out_of_range("world: unknown joint");
    const DockJoint j = joints_[static_cast<size_t>(ji)];
    const RigidBody c = body(combined_id);

    auto split = [&](const Vec3& offset, const Mat3& rel_rot) {
      BodyState s;
      s.position = c.state.position + c.state.rotation * offset;
      s.velocity = c.state.velocity + c.state.rotation * c.state.omega.cross(offset);
      s.rotation = c.state.rotation * rel_rot;
      s.omega = rel_rot.transpose() * c.state.omega;
      return s;
    };

    RigidBody f;
    f.id = j.female_id;
    f.nominal = j.female_nominal;
    f.actual = j.female_actual;
    f.thrust_gain = j.female_gain;
    f.state = split(j.female_offset, Mat3::Identity());
    f.thrust_cmd = c.thrust_cmd.head(j.female_nominal.rotor_count());

    RigidBody m;
    m.id = j.male_id;
    m.nominal = j.male_nominal;
    m.actual = j.male_actual;
    m.thrust_gain = j.male_gain;
    m.state = split(j.male_offset, j.relative.rotation);
    m.thrust_cmd = c.thrust_cmd.tail(j.male_nominal.rotor_count());

    remove(combined_id);
    joints_.erase(joints_.begin() + ji);
    bodies_.push_back(std::move(f));
    bodies_.push_back(std::move(m));
    return {j.female_id, j.male_id};
  }

 private:
  int find(int id) const {
    for (size_t k = 0; k < bodies_.size(); ++k) {
      if (bodies_[k].id == id) return static_cast<int>(k);
    }
    return -1;
  }

  void remove(int id) {
    const int k = find(id);
    if (k >= 0) bodies_.erase(bodies_.begin() + k);
  }

  double dt_;
  double time_ = 0.0;
  int steps_since_renorm_ = 0;
  int next_id_ = 0;
  std::vector<RigidBody> bodies_;
  std::vector<DockJoint> joints_;
};

// ---------------------------------------------------------------------------
// Sensing

struct SensorModel {
  double pos_sigma = 0.0;  // m, per axis
  double att_sigma = 0.0;  // rad, per axis (also used for the rate channels)
  int latency_ticks = 0;   // control ticks of delay

  void validate() const {
    if (pos_sigma < 0 || att_sigma < 0 || latency_ticks < 0) {
      throw std::invalid_argument("sensor model: sigmas and latency must be nonnegative");
    }
  }
};

struct Observation {
  double time = 0.0;
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Mat3 rotation = Mat3::Identity();
  Vec3 omega = Vec3::Zero();
};

// Per-body sensor: adds white noise and an integer-tick delay line.  Velocity
// noise reuses pos_sigma (per second) and rate noise reuses att_sigma; both
// choices are declared in the telemetry documentation.
class Sensor {
 public:
  explicit Sensor(const SensorModel& model) : model_(model) { model_.validate(); }

  Observation sample(const BodyState& truth, double time, Rng& rng) {
    Observation o;
    o.time = time;
    o.position = truth.position + model_.pos_sigma * gauss3(rng);
    o.velocity = truth.velocity + model_.pos_sigma * gauss3(rng);
    o.rotation = truth.rotation * exp_so3(model_.att_sigma * gauss3(rng));
    o.omega = truth.omega + model_.att_sigma * gauss3(rng);
    buffer_.push_back(o);
    const size_t keep = static_cast<size_t>(model_.latency_ticks) + 1;
    while (buffer_.size() > keep) buffer_.pop_front();
    return buffer_.front();
  }

  void reset() { buffer_.clear(); }

 private:
  static Vec3 gauss3(Rng& rng) { return {rng.normal(), rng.normal(), rng.normal()}; }

  SensorModel model_;
  std::deque<Observation> buffer_;
};

// ---------------------------------------------------------------------------
// Near-contact aerodynamic stand-in: a bounded random-direction force that
// ramps up as the docking gap closes (declared modeling choice; the airflow
// interference between close airframes is not quantified upstream).

struct ContactDisturbance {
  double magnitude = 0.3;  // N at zero gap
  double range = 0.3;      // m of gap over which the ramp acts

  double scale(double gap) const {
    if (range <= 0.0) return 0.0;
    const double s = 1.0 - gap / range;
    return magnitude * std::min(std::max(s, 0.0), 1.0);
  }
};

// Zero-mean coloured force noise (discrete Ornstein-Uhlenbeck per axis).
// update() returns a vector whose stationary overall RMS is 1, so the caller
// multiplies by the ramped magnitude.  The mixing constants give a ~0.17 s
// correlation time at the 40 Hz control rate: fast enough to read as
// turbulence, slow enough that the craft actually gets pushed around.
class DisturbanceNoise {
 public:
  Vec3 update(Rng& rng) {
    const Vec3 n(rng.normal(), rng.normal(), rng.normal());
    state_ = 0.86 * state_ + 0.51 * n;  // per-axis stationary variance ~1
    return state_ / std::sqrt(3.0);
  }

  void reset() { state_ = Vec3::Zero(); }

 private:
  Vec3 state_ = Vec3::Zero();
};

}  // namespace tiltdock
