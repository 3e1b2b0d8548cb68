#pragma once

// Scenario engine: closed-loop experiments that exercise the whole stack.
//
//   circle_unit / circle_assembled  — trajectory tracking with sensor noise
//   assembly                        — FSM-driven docking with model switch
//   disassembly                     — switch back to unit control and release
//   transition_ablation             — model switch with and without the
//                                     thrust transition, same seed
//   valve_torque                    — yaw-torque capability, analytic + flown
//
// Physics runs at 1 ms, controllers at 40 Hz (every 25 steps), the docking
// state machine at 10 Hz (every 100 steps).  All randomness flows from one
// seed through fixed substreams, and every metric is computed from the true
// state while controllers only ever see sensor observations.

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tiltdock/controllers.hpp"
#include "tiltdock/feasibility.hpp"
#include "tiltdock/fsm.hpp"
#include "tiltdock/io.hpp"
#include "tiltdock/sim.hpp"
#include "tiltdock/svg.hpp"
#include "tiltdock/switching.hpp"

namespace tiltdock {

// ---------------------------------------------------------------------------
// Scenario specification

inline const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = {
      "circle_unit",  "circle_assembled",    "assembly",
      "disassembly",  "transition_ablation", "valve_torque"};
  return names;
}

struct CircleSpec {
  double radius = 0.5;    // m
  double altitude = 1.0;  // m
  double laps = 2.0;
  double window = 60.0;   // s for all laps
  double settle = 8.0;    // s of hover before the window
};

// User-facing model-error block; expands to the plant-side injection.
struct ModelErrorConfig {
  std::string unit = "none";  // none | male | female
  double mass_scale = 1.0;
  double inertia_scale = 1.0;
  double thrust_gain = 1.0;  // uniform per-rotor factor

  bool enabled() const { return unit != "none"; }

  ModelErrorInjection build(int rotor_count) const {
    ModelErrorInjection inj;
    inj.mass_scale = mass_scale;
    inj.inertia_scale = inertia_scale;
    inj.thrust_gain = thrust_gain * VecX::Ones(rotor_count);
    inj.validate(rotor_count);
    return inj;
  }

  void validate() const {
    if (unit != "none" && unit != "male" && unit != "female") {
      throw ConfigError("model_error.unit must be one of none|male|female");
    }
  }
};

struct ScenarioSpec {
  std::string scenario = "circle_unit";
  std::uint64_t seed = 0;
  double duration = 0.0;  // s; 0 means the scenario default
  UnitConfig unit;
  double separation = kDockedSeparation;
  bool use_transition = true;
  SensorModel noise{0.002, 0.002, 1};
  ModelErrorConfig model_error;
  ContactDisturbance disturbance;
  Tolerances tolerances;
  CircleSpec circle;
  double request_time = 3.0;  // s, disassembly request / valve ramp start
  double valve_torque = 2.4;  // N m, load target for the valve scenario

  void validate() const {
    bool known = false;
    for (const auto& n : scenario_names()) known = known || n == scenario;
    if (!known) throw ConfigError("unknown scenario '" + scenario + "'");
    if (duration < 0) throw ConfigError("duration must be nonnegative");
    if (separation <= 0) throw ConfigError("separation must be positive");
    if (circle.radius <= 0 || circle.window <= 0 || circle.laps <= 0 || circle.settle < 0) {
      throw ConfigError("circle block values must be positive");
    }
    if (request_time < 0.5) throw ConfigError("request_time must be at least 0.5 s");
    if (valve_torque <= 0) throw ConfigError("valve_torque must be positive");
    noise.validate();
    model_error.validate();
    tolerances.validate();
    unit.build();  // throws on bad airframe parameters
  }

  double effective_duration() const {
    if (duration > 0) return duration;
    if (scenario == "circle_unit" || scenario == "circle_assembled") {
      return circle.settle + circle.window + 1.0;
    }
    if (scenario == "assembly") return 60.0;
    if (scenario == "disassembly") return 30.0;
    if (scenario == "transition_ablation") return request_time + 15.0;
    return request_time + 12.0;  // valve_torque: settle + ramp + hold
  }
};

// Defaults per scenario name.  The ablation ships with a thrust-gain error on
// the male unit plus a light-side mass error: the two plant errors then pull
// the demanded total in the same direction, giving the naive switch a visible
// feedforward step to stumble over (a heavy-side error would largely cancel
// the gain error on this airframe).
inline ScenarioSpec default_scenario(const std::string& name) {
  ScenarioSpec s;
  s.scenario = name;
  if (name == "transition_ablation") {
    s.model_error.unit = "male";
    s.model_error.thrust_gain = 1.10;
    s.model_error.mass_scale = 0.92;
    s.request_time = 10.0;  // free-flight convergence before the dock
    // The ablation isolates the switching mechanism, so its default run is
    // deterministic: with stochastic sensors the altitude record conflates
    // hover wander with the switch transient being measured.
    s.noise = SensorModel{0.0, 0.0, 0};
  }
  if (name == "disassembly") s.request_time = 3.0;
  if (name == "valve_torque") s.request_time = 2.0;
  s.tolerances.x_dock = s.separation;
  s.validate();
  return s;
}

inline ScenarioSpec scenario_from_json(const Json& j) {
  schema::check_keys(j, {"schema_version", "scenario", "seed", "duration", "airframe",
                         "separation", "use_transition", "noise", "model_error", "disturbance",
                         "tolerances", "circle", "request_time", "valve_torque"},
                     "");
  schema::check_schema_version(j, "");
  const std::string name = schema::get_string(j, "scenario", "", "");
  if (name.empty()) throw ConfigError("'scenario' is required");
  ScenarioSpec s = default_scenario(name);

  if (j.contains("seed")) {
    const Json& v = j.at("seed");
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      throw ConfigError("'seed' must be a nonnegative integer");
    }
    s.seed = v.get<std::uint64_t>();
  }
  s.duration = schema::get_number(j, "duration", s.duration, "");
  if (j.contains("airframe")) s.unit = unit_config_from_json(j.at("airframe"), "airframe");
  s.separation = schema::get_number(j, "separation", s.separation, "");
  s.use_transition = schema::get_bool(j, "use_transition", s.use_transition, "");

  if (j.contains("noise")) {
    const Json& n = j.at("noise");
    schema::check_keys(n, {"position_sigma", "attitude_sigma", "latency_ticks"}, "noise");
    s.noise.pos_sigma = schema::get_number(n, "position_sigma", s.noise.pos_sigma, "noise");
    s.noise.att_sigma = schema::get_number(n, "attitude_sigma", s.noise.att_sigma, "noise");
    s.noise.latency_ticks =
        static_cast<int>(schema::get_number(n, "latency_ticks", s.noise.latency_ticks, "noise"));
  }
  if (j.contains("model_error")) {
    const Json& m = j.at("model_error");
    schema::check_keys(m, {"unit", "mass_scale", "inertia_scale", "thrust_gain"}, "model_error");
    s.model_error.unit = schema::get_string(m, "unit", s.model_error.unit, "model_error");
    s.model_error.mass_scale =
        schema::get_number(m, "mass_scale", s.model_error.mass_scale, "model_error");
    s.model_error.inertia_scale =
        schema::get_number(m, "inertia_scale", s.model_error.inertia_scale, "model_error");
    s.model_error.thrust_gain =
        schema::get_number(m, "thrust_gain", s.model_error.thrust_gain, "model_error");
  }
  if (j.contains("disturbance")) {
    const Json& d = j.at("disturbance");
    schema::check_keys(d, {"magnitude", "range"}, "disturbance");
    s.disturbance.magnitude =
        schema::get_number(d, "magnitude", s.disturbance.magnitude, "disturbance");
    s.disturbance.range = schema::get_number(d, "range", s.disturbance.range, "disturbance");
  }
  if (j.contains("tolerances")) {
    const Json& t = j.at("tolerances");
    schema::check_keys(t, {"e1_y", "e1_z", "e1_psi", "e2_x", "e2_y", "e2_z", "e2_psi",
                           "d_st", "x_dock"},
                       "tolerances");
    Tolerances& tol = s.tolerances;
    tol.e1_y = schema::get_number(t, "e1_y", tol.e1_y, "tolerances");
    tol.e1_z = schema::get_number(t, "e1_z", tol.e1_z, "tolerances");
    tol.e1_psi = schema::get_number(t, "e1_psi", tol.e1_psi, "tolerances");
    tol.e2_x = schema::get_number(t, "e2_x", tol.e2_x, "tolerances");
    tol.e2_y = schema::get_number(t, "e2_y", tol.e2_y, "tolerances");
    tol.e2_z = schema::get_number(t, "e2_z", tol.e2_z, "tolerances");
    tol.e2_psi = schema::get_number(t, "e2_psi", tol.e2_psi, "tolerances");
    tol.d_st = schema::get_number(t, "d_st", tol.d_st, "tolerances");
    tol.x_dock = schema::get_number(t, "x_dock", s.separation, "tolerances");
  } else {
    s.tolerances.x_dock = s.separation;
  }
  if (j.contains("circle")) {
    const Json& c = j.at("circle");
    schema::check_keys(c, {"radius", "altitude", "laps", "window", "settle"}, "circle");
    s.circle.radius = schema::get_number(c, "radius", s.circle.radius, "circle");
    s.circle.altitude = schema::get_number(c, "altitude", s.circle.altitude, "circle");
    s.circle.laps = schema::get_number(c, "laps", s.circle.laps, "circle");
    s.circle.window = schema::get_number(c, "window", s.circle.window, "circle");
    s.circle.settle = schema::get_number(c, "settle", s.circle.settle, "circle");
  }
  s.request_time = schema::get_number(j, "request_time", s.request_time, "");
  s.valve_torque = schema::get_number(j, "valve_torque", s.valve_torque, "");
  s.validate();
  return s;
}

inline Json scenario_to_json(const ScenarioSpec& s) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["scenario"] = s.scenario;
  j["seed"] = s.seed;
  j["duration"] = s.duration;
  j["airframe"] = unit_config_to_json(s.unit);
  j["separation"] = s.separation;
  j["use_transition"] = s.use_transition;
  j["noise"] = {{"position_sigma", s.noise.pos_sigma},
                {"attitude_sigma", s.noise.att_sigma},
                {"latency_ticks", s.noise.latency_ticks}};
  j["model_error"] = {{"unit", s.model_error.unit},
                      {"mass_scale", s.model_error.mass_scale},
                      {"inertia_scale", s.model_error.inertia_scale},
                      {"thrust_gain", s.model_error.thrust_gain}};
  j["disturbance"] = {{"magnitude", s.disturbance.magnitude}, {"range", s.disturbance.range}};
  j["tolerances"] = {{"e1_y", s.tolerances.e1_y},   {"e1_z", s.tolerances.e1_z},
                     {"e1_psi", s.tolerances.e1_psi}, {"e2_x", s.tolerances.e2_x},
                     {"e2_y", s.tolerances.e2_y},   {"e2_z", s.tolerances.e2_z},
                     {"e2_psi", s.tolerances.e2_psi}, {"d_st", s.tolerances.d_st},
                     {"x_dock", s.tolerances.x_dock}};
  j["circle"] = {{"radius", s.circle.radius},
                 {"altitude", s.circle.altitude},
                 {"laps", s.circle.laps},
                 {"window", s.circle.window},
                 {"settle", s.circle.settle}};
  j["request_time"] = s.request_time;
  j["valve_torque"] = s.valve_torque;
  return j;
}

// ---------------------------------------------------------------------------
// Result containers

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void row(const std::vector<std::string>& cells) { rows.push_back(cells); }

  std::string to_csv() const {
    CsvWriter w;
    w.header(header);
    for (const auto& r : rows) w.row_strings(r);
    return w.str();
  }
};

struct ScenarioResult {
  Json summary;
  Table telemetry;
  std::string events_jsonl;  // empty when the scenario has no event log
  bool success = false;
  bool diverged = false;
};

// ---------------------------------------------------------------------------
// Internals shared by the runners

namespace scenario_detail {

constexpr int kStepsPerControl = 25;  // 1 ms physics -> 40 Hz control
constexpr int kStepsPerFsm = 100;     // -> 10 Hz state machine

inline double yaw_of(const Mat3& r) { return euler_zyx(r).yaw; }

inline std::string fmt(double v) { return format_number(v); }

// Moving-average pose filter used for state-machine condition checks.
class PoseFilter {
 public:
  explicit PoseFilter(size_t window = 5) : window_(window) {}

  void push(const Observation& o) {
    samples_.push_back(o);
    if (samples_.size() > window_) samples_.erase(samples_.begin());
  }

  bool ready() const { return !samples_.empty(); }

  Vec3 position() const {
    Vec3 p = Vec3::Zero();
    for (const auto& s : samples_) p += s.position;
    return p / static_cast<double>(samples_.size());
  }

  double yaw() const {
    double c = 0, s = 0;
    for (const auto& o : samples_) {
      const double y = yaw_of(o.rotation);
      c += std::cos(y);
      s += std::sin(y);
    }
    return std::atan2(s, c);
  }

  void reset() { samples_.clear(); }

 private:
  size_t window_;
  std::vector<Observation> samples_;
};

inline RelativePose relative_pose(const Vec3& female_pos, double female_yaw,
                                  const Vec3& male_pos, double male_yaw) {
  RelativePose rel;
  rel.r = rot_z(female_yaw).transpose() * (male_pos - female_pos);
  rel.psi = wrap_pi(male_yaw - female_yaw);
  return rel;
}

// Commanded body torque implied by a thrust vector under the allocation
// convention (counter-torque omitted), for telemetry.
inline double commanded_torque_norm(const AllocationMatrices& alloc, const VecX& lambda) {
  return (alloc.Q_rot * lambda).norm();
}

struct HoldTimer {
  double held = 0.0;
  double satisfied_at = -1.0;

  // Returns true once the condition has held for `need` seconds.
  bool update(bool ok, double t, double dt, double need) {
    if (!ok) {
      held = 0.0;
      satisfied_at = -1.0;
      return false;
    }
    if (held == 0.0) satisfied_at = t;
    held += dt;
    return held >= need;
  }
};

inline Json base_summary(const ScenarioSpec& spec) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["scenario"] = spec.scenario;
  j["seed"] = spec.seed;
  j["success"] = false;
  j["failure_cause"] = "";
  j["duration_simulated"] = 0.0;
  j["metrics"] = Json::object();
  return j;
}

}  // namespace scenario_detail

// ---------------------------------------------------------------------------
// Circle tracking (unit or assembled)

inline ScenarioResult run_circle(const ScenarioSpec& spec, bool assembled) {
  using namespace scenario_detail;
  ScenarioResult res;
  res.summary = base_summary(spec);
  res.telemetry.header = {"time", "x",   "y",    "z",     "ref_x",        "ref_y", "ref_z",
                          "err",  "roll", "pitch", "yaw",  "thrust_total", "torque_norm"};

  const AirframeModel unit = spec.unit.build();
  const AirframeModel model = assembled ? make_assembled(unit, spec.separation) : unit;
  const AllocationMatrices alloc = build_allocation(model);
  const CircleSpec& c = spec.circle;

  World w;
  BodyState st;
  st.position = Vec3(c.radius, 0.0, c.altitude);
  st.rotation = assembled ? Mat3::Identity() : static_thrust_frame(unit).R_C;
  const int id = w.add_body(model, st);

  Rng master(spec.seed);
  Rng rng_sensor = master.split(0);
  Sensor sensor(spec.noise);

  std::optional<UnitController> uctrl;
  std::optional<AssembledController> actrl;
  if (assembled) {
    actrl.emplace(model);
  } else {
    uctrl.emplace(model);
  }

  const double t_end = spec.effective_duration();
  const double omega = 2.0 * kPi * c.laps / c.window;
  double sum_sq = 0.0, max_err = 0.0, max_alt = 0.0, peak_torque = 0.0;
  long n_window = 0;

  auto reference = [&](double t) {
    TrackingTarget tgt;
    if (t < c.settle) {
      tgt.position = Vec3(c.radius, 0.0, c.altitude);
      return tgt;
    }
    const double tau = std::min(t - c.settle, c.window);
    const double th = omega * tau;
    tgt.position = Vec3(c.radius * std::cos(th), c.radius * std::sin(th), c.altitude);
    if (tau < c.window) {
      tgt.velocity = c.radius * omega * Vec3(-std::sin(th), std::cos(th), 0.0);
    }
    return tgt;
  };

  try {
    const long steps = static_cast<long>(t_end * 1000.0);
    for (long k = 0; k <= steps; ++k) {
      const double t = w.time();
      if (k % kStepsPerControl == 0) {
        const Observation obs = sensor.sample(w.body(id).state, t, rng_sensor);
        const TrackingTarget tgt = reference(t);
        VecX lam;
        if (assembled) {
          actrl->set_target(tgt);
          lam = actrl->tick(obs);
        } else {
          uctrl->set_target(tgt);
          lam = uctrl->tick(obs);
        }
        w.set_thrusts(id, lam);

        const BodyState& s = w.body(id).state;
        const Vec3 err = s.position - tgt.position;
        const double torque = commanded_torque_norm(alloc, World::clamp_thrusts(w.body(id), lam));
        peak_torque = std::max(peak_torque, torque);
        const EulerZyx e = euler_zyx(s.rotation);
        res.telemetry.row({fmt(t), fmt(s.position.x()), fmt(s.position.y()),
                           fmt(s.position.z()), fmt(tgt.position.x()), fmt(tgt.position.y()),
                           fmt(tgt.position.z()), fmt(err.norm()), fmt(e.roll), fmt(e.pitch),
                           fmt(e.yaw), fmt(lam.sum()), fmt(torque)});
        if (t >= c.settle && t <= c.settle + c.window) {
          sum_sq += err.squaredNorm();
          ++n_window;
          max_err = std::max(max_err, err.norm());
          max_alt = std::max(max_alt, std::abs(s.position.z() - c.altitude));
        }
      }
      w.step();
    }
  } catch (const SimDiverged& e) {
    res.diverged = true;
    res.summary["failure_cause"] = e.what();
  }

  const double rmse = n_window > 0 ? std::sqrt(sum_sq / static_cast<double>(n_window)) : 0.0;
  res.success = !res.diverged && n_window > 0 && rmse < 0.10;
  res.summary["success"] = res.success;
  res.summary["duration_simulated"] = w.time();
  Json& m = res.summary["metrics"];
  m["rmse"] = rmse;
  m["max_tracking_error"] = max_err;
  m["max_altitude_excursion"] = max_alt;
  m["peak_commanded_torque"] = peak_torque;
  return res;
}

// ---------------------------------------------------------------------------
// Transition ablation: identical event chain twice, with and without the
// transition processing (integral carry-over + thrust blend).  The naive arm
// starts the assembled controller from scratch and passes its demand through
// unscaled, which is exactly what the transition exists to prevent.

namespace scenario_detail {

struct AblationArm {
  double excursion = 0.0;     // max |z - z_switch| after the switch
  double thrust_jump = 0.0;   // |S_first - S_last| across the switch
  double z_switch = 0.0;
  bool diverged = false;
  std::string cause;
};

inline AblationArm run_ablation_arm(const ScenarioSpec& spec, bool with_transition,
                                    Table* telemetry) {
  AblationArm out;
  const AirframeModel unit = spec.unit.build();
  const TiltedFrame frame = static_thrust_frame(unit);
  const std::string arm_name = with_transition ? "with" : "without";

  World w;
  BodyState sf, sm;
  sf.position = Vec3(0.0, 0.0, 1.0);
  sf.rotation = frame.R_C;
  sm.position = Vec3(spec.separation, 0.0, 1.0);
  sm.rotation = rot_z(kPi) * frame.R_C;

  const ModelErrorInjection none{};
  ModelErrorInjection inj_f = none, inj_m = none;
  if (spec.model_error.unit == "female") inj_f = spec.model_error.build(unit.rotor_count());
  if (spec.model_error.unit == "male") inj_m = spec.model_error.build(unit.rotor_count());
  const int fid = w.add_body(unit, sf, inj_f);
  const int mid = w.add_body(unit, sm, inj_m);

  Rng master(spec.seed);
  Rng rng_f = master.split(0);
  Rng rng_m = master.split(1);
  Rng rng_c = master.split(3);
  Sensor sens_f(spec.noise), sens_m(spec.noise), sens_c(spec.noise);

  UnitController fctrl(unit), mctrl(unit);
  TrackingTarget ft, mt;
  ft.position = sf.position;
  mt.position = sm.position;
  mt.yaw = -kPi;
  fctrl.set_target(ft);
  mctrl.set_target(mt);

  std::optional<AssembledController> actrl;
  TransitionState ts_f, ts_m;
  int cid = -1;
  double s_last_pre = 0.0;
  bool first_post_tick = true;

  const double t_switch = spec.request_time;
  const double t_end = spec.effective_duration();
  const long steps = static_cast<long>(t_end * 1000.0);

  try {
    for (long k = 0; k <= steps; ++k) {
      const double t = w.time();
      if (k % kStepsPerControl == 0) {
        if (cid < 0 && t >= t_switch) {
          // Dock at the nominal pose and switch control models in the same
          // control tick.  The free-flight errors are millimetres, so the
          // capture tolerance is never the limiting factor here.
          s_last_pre =
              w.body(fid).thrust_cmd.cwiseAbs().sum() + w.body(mid).thrust_cmd.cwiseAbs().sum();
          const VecX lam_f = w.body(fid).thrust_cmd;
          const VecX lam_m = w.body(mid).thrust_cmd;
          cid = w.dock(fid, mid, spec.separation);
          out.z_switch = w.body(cid).state.position.z();

          actrl.emplace(w.body(cid).nominal);
          TrackingTarget tgt;
          tgt.position = w.body(cid).state.position;
          tgt.yaw = yaw_of(w.body(cid).state.rotation);
          actrl->set_target(tgt);
          if (with_transition) {
            carry_integrals(fctrl.position_state(), mctrl.position_state(), *actrl);
            ts_f = begin_switch(lam_f);
            ts_m = begin_switch(lam_m);
          }
        }

        if (cid < 0) {
          const Observation of = sens_f.sample(w.body(fid).state, t, rng_f);
          const Observation om = sens_m.sample(w.body(mid).state, t, rng_m);
          w.set_thrusts(fid, fctrl.tick(of));
          w.set_thrusts(mid, mctrl.tick(om));
        } else {
          const Observation oc = sens_c.sample(w.body(cid).state, t, rng_c);
          VecX lam = actrl->tick(oc);
          double weight = 1.0;
          if (with_transition) {
            VecX half_f = transition_scale(VecX(lam.head(4)), ts_f);
            VecX half_m = transition_scale(VecX(lam.tail(4)), ts_m);
            lam.head(4) = half_f;
            lam.tail(4) = half_m;
            weight = ts_f.last_weight;
          }
          w.set_thrusts(cid, lam);
          if (first_post_tick) {
            out.thrust_jump = std::abs(lam.cwiseAbs().sum() - s_last_pre);
            first_post_tick = false;
          }
          const double z = w.body(cid).state.position.z();
          out.excursion = std::max(out.excursion, std::abs(z - out.z_switch));
          if (telemetry) {
            telemetry->row({scenario_detail::fmt(t), arm_name, scenario_detail::fmt(z),
                            scenario_detail::fmt(z - out.z_switch),
                            scenario_detail::fmt(lam.sum()), scenario_detail::fmt(weight)});
          }
        }
      }
      w.step();
      if (cid >= 0) {
        const double z = w.body(cid).state.position.z();
        out.excursion = std::max(out.excursion, std::abs(z - out.z_switch));
      }
    }
  } catch (const SimDiverged& e) {
    out.diverged = true;
    out.cause = e.what();
    out.excursion = std::max(out.excursion, 10.0);  // a diverged arm is a failed arm
  }
  return out;
}

}  // namespace scenario_detail

inline ScenarioResult run_transition_ablation(const ScenarioSpec& spec) {
  using namespace scenario_detail;
  ScenarioResult res;
  res.summary = base_summary(spec);
  res.telemetry.header = {"time", "arm", "z", "z_err", "thrust_total", "weight"};

  const AblationArm with = run_ablation_arm(spec, true, &res.telemetry);
  const AblationArm without = run_ablation_arm(spec, false, &res.telemetry);

  res.diverged = with.diverged;  // the transition arm must fly cleanly
  if (with.diverged) res.summary["failure_cause"] = with.cause;

  const double ratio = without.excursion > 1e-12 ? with.excursion / without.excursion
                                                 : (with.excursion > 1e-12 ? 1e9 : 0.0);
  res.success = !with.diverged && ratio < 0.25;
  res.summary["success"] = res.success;
  res.summary["duration_simulated"] = spec.effective_duration();
  Json& m = res.summary["metrics"];
  m["excursion_with_transition"] = with.excursion;
  m["excursion_without_transition"] = without.excursion;
  m["excursion_ratio"] = ratio;
  m["thrust_jump_with_transition"] = with.thrust_jump;
  m["thrust_jump_without_transition"] = without.thrust_jump;
  m["naive_arm_diverged"] = without.diverged;
  return res;
}

// ---------------------------------------------------------------------------
// Assembly: the full docking chain driven by the state machine.

inline ScenarioResult run_assembly(const ScenarioSpec& spec) {
  using namespace scenario_detail;
  ScenarioResult res;
  res.summary = base_summary(spec);
  res.telemetry.header = {"time",       "state",    "rel_x",        "rel_y",
                          "rel_z",      "rel_psi",  "female_err",   "male_err",
                          "combined_err", "thrust_total", "weight"};

  const AirframeModel unit = spec.unit.build();
  const TiltedFrame frame = static_thrust_frame(unit);

  World w;
  BodyState sf, sm;
  sf.position = Vec3(0.0, 0.0, 1.0);
  sf.rotation = frame.R_C;
  // The male spawns clear of every condition band: lateral, vertical and
  // heading errors all start outside the safety tolerance.
  sm.position = Vec3(spec.tolerances.d_st + 0.35, 0.18, 0.88);
  sm.rotation = rot_z(kPi + 0.3) * frame.R_C;

  const ModelErrorInjection none{};
  ModelErrorInjection inj_f = none, inj_m = none;
  if (spec.model_error.unit == "female") inj_f = spec.model_error.build(unit.rotor_count());
  if (spec.model_error.unit == "male") inj_m = spec.model_error.build(unit.rotor_count());
  const int fid = w.add_body(unit, sf, inj_f);
  const int mid = w.add_body(unit, sm, inj_m);

  Rng master(spec.seed);
  Rng rng_f = master.split(0);
  Rng rng_m = master.split(1);
  Rng rng_d = master.split(2);
  Rng rng_c = master.split(3);
  Sensor sens_f(spec.noise), sens_m(spec.noise), sens_c(spec.noise);
  DisturbanceNoise dist_f, dist_m;
  PoseFilter filt_f, filt_m;

  UnitController fctrl(unit), mctrl(unit);
  const TrackingTarget female_hold{Vec3(0.0, 0.0, 1.0), Vec3::Zero(), 0.0};
  fctrl.set_target(female_hold);

  DockingFsm fsm(spec.tolerances, 0.1);
  FsmCommands cmd;
  cmd.male_target = standby_targets(spec.tolerances).position;

  std::optional<AssembledController> actrl;
  TransitionState ts_f, ts_m;
  int cid = -1;
  DockJoint joint;
  bool switched = false;
  Observation last_obs_c;
  long capture_attempts = 0, capture_misses = 0;
  double success_time = -1.0;
  HoldTimer stable;
  std::string events;
  RelativePose rel;

  auto log_event = [&](double t, const std::string& state, const std::string& note) {
    Json e;
    e["t"] = t;
    e["state"] = state;
    e["note"] = note;
    events += e.dump() + "\n";
  };

  const double t_end = spec.effective_duration();
  const long steps = static_cast<long>(t_end * 1000.0);

  try {
    for (long k = 0; k <= steps; ++k) {
      const double t = w.time();
      const bool control_tick = k % kStepsPerControl == 0;
      const bool fsm_tick = k % kStepsPerFsm == 0;

      if (control_tick && cid < 0) {
        const Observation of = sens_f.sample(w.body(fid).state, t, rng_f);
        const Observation om = sens_m.sample(w.body(mid).state, t, rng_m);
        filt_f.push(of);
        filt_m.push(om);

        TrackingTarget male_tgt;
        male_tgt.position =
            female_hold.position + rot_z(female_hold.yaw) * cmd.male_target;
        male_tgt.yaw = wrap_pi(female_hold.yaw + cmd.male_yaw);
        mctrl.set_target(male_tgt);
        w.set_thrusts(fid, fctrl.tick(of));
        w.set_thrusts(mid, mctrl.tick(om));

        // Near-contact thrust interference on both units.
        const double gap =
            (w.body(mid).state.position - w.body(fid).state.position).norm() - spec.separation;
        const double mag = spec.disturbance.scale(std::max(gap, 0.0));
        w.body(fid).ext_force_world = mag * dist_f.update(rng_d);
        w.body(mid).ext_force_world = mag * dist_m.update(rng_d);
      } else if (control_tick) {
        last_obs_c = sens_c.sample(w.body(cid).state, t, rng_c);
        VecX lam8;
        double weight = 1.0;
        if (!switched) {
          // Brief joined window between the mechanical join and the next
          // state-machine tick: both unit controllers keep flying their own
          // halves of the rigid pair.
          const Observation uf = unit_observation(last_obs_c, joint.female_offset,
                                                  Mat3::Identity());
          const Observation um = unit_observation(last_obs_c, joint.male_offset,
                                                  joint.relative.rotation);
          lam8 = VecX(8);
          lam8.head(4) = fctrl.tick(uf);
          lam8.tail(4) = mctrl.tick(um);
          weight = 0.0;
        } else {
          lam8 = actrl->tick(last_obs_c);
          if (spec.use_transition) {
            VecX half_f = transition_scale(VecX(lam8.head(4)), ts_f);
            VecX half_m = transition_scale(VecX(lam8.tail(4)), ts_m);
            lam8.head(4) = half_f;
            lam8.tail(4) = half_m;
            weight = ts_f.last_weight;
          }
        }
        w.set_thrusts(cid, lam8);
      }

      if (fsm_tick) {
        FsmInputs in;
        if (cid < 0 && filt_f.ready() && filt_m.ready()) {
          rel = relative_pose(filt_f.position(), filt_f.yaw(), filt_m.position(), filt_m.yaw());
        } else if (cid >= 0) {
          rel.r = Vec3(spec.separation, 0.0, 0.0);
          rel.psi = -kPi;
        }
        in.rel = rel;
        in.joint_locked = cid >= 0;
        in.transition_done =
            switched && (!spec.use_transition || (!ts_f.active && !ts_m.active));
        cmd = fsm.step(in);

        if (cmd.actuate_dock && cid < 0) {
          ++capture_attempts;
          try {
            cid = w.dock(fid, mid, spec.separation);
            joint = w.joints().front();
            log_event(t, to_string(fsm.state()), "capture");
          } catch (const CaptureMiss& e) {
            ++capture_misses;
            log_event(t, to_string(fsm.state()), std::string("capture miss: ") + e.what());
          }
        }
        if (cmd.begin_switch_assembled && cid >= 0 && !switched) {
          actrl.emplace(w.body(cid).nominal);
          TrackingTarget tgt;
          tgt.position = last_obs_c.position;
          tgt.yaw = yaw_of(last_obs_c.rotation);
          actrl->set_target(tgt);
          if (spec.use_transition) {
            carry_integrals(fctrl.position_state(), mctrl.position_state(), *actrl);
            ts_f = begin_switch(VecX(w.body(cid).thrust_cmd.head(4)));
            ts_m = begin_switch(VecX(w.body(cid).thrust_cmd.tail(4)));
          }
          switched = true;
          log_event(t, to_string(fsm.state()), "model switch to assembled");
        }
      }

      if (control_tick) {
        const char* state_name = to_string(fsm.state());
        std::string f_err, m_err, c_err, thrust;
        if (cid < 0) {
          f_err = fmt((w.body(fid).state.position - fctrl.target().position).norm());
          m_err = fmt((w.body(mid).state.position - mctrl.target().position).norm());
          thrust = fmt(w.body(fid).thrust_cmd.sum() + w.body(mid).thrust_cmd.sum());
        } else {
          if (switched) {
            c_err = fmt((w.body(cid).state.position - actrl->target().position).norm());
          }
          thrust = fmt(w.body(cid).thrust_cmd.sum());
        }
        res.telemetry.row({fmt(t), state_name, fmt(rel.r.x()), fmt(rel.r.y()), fmt(rel.r.z()),
                           fmt(rel.psi), f_err, m_err, c_err, thrust,
                           fmt(switched && spec.use_transition ? ts_f.last_weight : 1.0)});

        if (fsm.state() == FsmStateId::Hovering && switched) {
          const double err =
              (w.body(cid).state.position - actrl->target().position).norm();
          if (stable.update(err < 0.2, t, kControlPeriod, 1.0) && success_time < 0) {
            success_time = t;
            log_event(t, "hovering", "assembled hover stable");
          }
        }
      }

      if (success_time >= 0 && t > success_time + 0.5) break;
      w.step();
    }
  } catch (const SimDiverged& e) {
    res.diverged = true;
    res.summary["failure_cause"] = e.what();
  }

  res.success = !res.diverged && success_time >= 0;
  if (!res.success && !res.diverged) res.summary["failure_cause"] = "timeout";
  res.summary["success"] = res.success;
  res.summary["duration_simulated"] = w.time();
  Json& m = res.summary["metrics"];
  m["success_time"] = success_time;
  m["capture_attempts"] = capture_attempts;
  m["capture_misses"] = capture_misses;
  m["fsm_transitions"] = static_cast<long>(fsm.events().size());
  res.events_jsonl = events;
  for (const auto& ev : fsm.events()) {
    Json e;
    e["t"] = ev.time;
    e["state"] = to_string(ev.state);
    e["note"] = ev.note;
    e["cond_safe"] = ev.cond_safe;
    e["cond_capture"] = ev.cond_capture;
    res.events_jsonl += e.dump() + "\n";
  }
  return res;
}

// ---------------------------------------------------------------------------
// Disassembly: hovering assembled pair, switch back to unit control under the
// blend, release, and retreat to standby.

inline ScenarioResult run_disassembly(const ScenarioSpec& spec) {
  using namespace scenario_detail;
  ScenarioResult res;
  res.summary = base_summary(spec);
  res.telemetry.header = {"time",       "state",    "rel_x",        "rel_y",
                          "rel_z",      "rel_psi",  "female_err",   "male_err",
                          "combined_err", "thrust_total", "weight"};

  const AirframeModel unit = spec.unit.build();

  World w;
  BodyState sf, sm;
  sf.position = Vec3(0.0, 0.0, 1.0);
  sf.rotation = Mat3::Identity();  // assembled craft hovers level
  sm.position = Vec3(spec.separation, 0.0, 1.0);
  sm.rotation = rot_z(kPi);

  const ModelErrorInjection none{};
  ModelErrorInjection inj_f = none, inj_m = none;
  if (spec.model_error.unit == "female") inj_f = spec.model_error.build(unit.rotor_count());
  if (spec.model_error.unit == "male") inj_m = spec.model_error.build(unit.rotor_count());
  const int fid0 = w.add_body(unit, sf, inj_f);
  const int mid0 = w.add_body(unit, sm, inj_m);
  int cid = w.dock(fid0, mid0, spec.separation);
  const DockJoint joint = w.joints().front();

  Rng master(spec.seed);
  Rng rng_f = master.split(0);
  Rng rng_m = master.split(1);
  Rng rng_d = master.split(2);
  Rng rng_c = master.split(3);
  Sensor sens_f(spec.noise), sens_m(spec.noise), sens_c(spec.noise);
  DisturbanceNoise dist_f, dist_m;
  PoseFilter filt_f, filt_m;

  AssembledController actrl(w.body(cid).nominal);
  TrackingTarget hold;
  hold.position = w.body(cid).state.position;
  actrl.set_target(hold);

  std::optional<UnitController> fctrl, mctrl;
  TransitionState ts_f, ts_m;
  DockingFsm fsm(spec.tolerances, 0.1, FsmStateId::Hovering);
  FsmCommands cmd;
  bool unit_mode = false;   // unit controllers flying (joined or split)
  bool released = false;
  int fid = -1, mid = -1;
  double success_time = -1.0;
  HoldTimer stable;
  std::string events;
  RelativePose rel;
  rel.r = Vec3(spec.separation, 0.0, 0.0);
  rel.psi = -kPi;

  auto log_event = [&](double t, const std::string& state, const std::string& note) {
    Json e;
    e["t"] = t;
    e["state"] = state;
    e["note"] = note;
    events += e.dump() + "\n";
  };

  const double t_end = spec.effective_duration();
  const long steps = static_cast<long>(t_end * 1000.0);

  try {
    for (long k = 0; k <= steps; ++k) {
      const double t = w.time();
      const bool control_tick = k % kStepsPerControl == 0;
      const bool fsm_tick = k % kStepsPerFsm == 0;
      Observation last_obs_c;

      if (control_tick && !released) {
        last_obs_c = sens_c.sample(w.body(cid).state, t, rng_c);
        VecX lam8(8);
        if (!unit_mode) {
          lam8 = actrl.tick(last_obs_c);
        } else {
          const Observation uf =
              unit_observation(last_obs_c, joint.female_offset, Mat3::Identity());
          const Observation um =
              unit_observation(last_obs_c, joint.male_offset, joint.relative.rotation);
          lam8.head(4) = fctrl->tick(uf);
          lam8.tail(4) = mctrl->tick(um);
          if (spec.use_transition) {
            VecX half_f = transition_scale(VecX(lam8.head(4)), ts_f);
            VecX half_m = transition_scale(VecX(lam8.tail(4)), ts_m);
            lam8.head(4) = half_f;
            lam8.tail(4) = half_m;
          }
        }
        w.set_thrusts(cid, lam8);
      } else if (control_tick) {
        const Observation of = sens_f.sample(w.body(fid).state, t, rng_f);
        const Observation om = sens_m.sample(w.body(mid).state, t, rng_m);
        filt_f.push(of);
        filt_m.push(om);
        TrackingTarget male_tgt;
        const TrackingTarget& fh = fctrl->target();
        male_tgt.position = fh.position + rot_z(fh.yaw) * cmd.male_target;
        male_tgt.yaw = wrap_pi(fh.yaw + cmd.male_yaw);
        mctrl->set_target(male_tgt);
        w.set_thrusts(fid, fctrl->tick(of));
        w.set_thrusts(mid, mctrl->tick(om));

        const double gap =
            (w.body(mid).state.position - w.body(fid).state.position).norm() - spec.separation;
        const double mag = spec.disturbance.scale(std::max(gap, 0.0));
        w.body(fid).ext_force_world = mag * dist_f.update(rng_d);
        w.body(mid).ext_force_world = mag * dist_m.update(rng_d);
      }

      if (fsm_tick) {
        FsmInputs in;
        if (released && filt_f.ready() && filt_m.ready()) {
          rel = relative_pose(filt_f.position(), filt_f.yaw(), filt_m.position(), filt_m.yaw());
        }
        in.rel = rel;
        in.joint_locked = !released;
        in.disassembly_request = t >= spec.request_time;
        in.transition_done =
            unit_mode && (!spec.use_transition || (!ts_f.active && !ts_m.active));
        cmd = fsm.step(in);

        if (cmd.begin_switch_unit && !unit_mode) {
          // Back to per-unit control on the still-joined body; position
          // integrals carry over, the blend keeps the total thrust seamless.
          const Observation oc = sens_c.sample(w.body(cid).state, t, rng_c);
          fctrl.emplace(unit);
          mctrl.emplace(unit);
          TrackingTarget tf, tm;
          tf.position = oc.position + oc.rotation * joint.female_offset;
          tf.yaw = yaw_of(oc.rotation);
          tm.position = oc.position + oc.rotation * joint.male_offset;
          tm.yaw = wrap_pi(yaw_of(oc.rotation * joint.relative.rotation));
          fctrl->set_target(tf);
          mctrl->set_target(tm);
          if (spec.use_transition) {
            carry_integrals(actrl.position_state(), *fctrl);
            carry_integrals(actrl.position_state(), *mctrl);
            ts_f = begin_switch(VecX(w.body(cid).thrust_cmd.head(4)));
            ts_m = begin_switch(VecX(w.body(cid).thrust_cmd.tail(4)));
          }
          unit_mode = true;
          log_event(t, to_string(fsm.state()), "model switch to units");
        }
        if (cmd.actuate_release && !released) {
          auto ids = w.undock(cid);
          fid = ids.first;
          mid = ids.second;
          // The attitude integrals wound up while the two controllers fought
          // through the rigid joint compensate a load that vanishes with the
          // joint; clear them at the boundary.
          fctrl->attitude_integral().setZero();
          mctrl->attitude_integral().setZero();
          sens_f.reset();
          sens_m.reset();
          released = true;
          log_event(t, to_string(fsm.state()), "joint released");
        }
      }

      if (control_tick) {
        std::string f_err, m_err, c_err, thrust;
        if (!released) {
          if (unit_mode) {
            f_err = fmt((w.body(cid).state.position + w.body(cid).state.rotation * joint.female_offset -
                         fctrl->target().position)
                            .norm());
          } else {
            c_err = fmt((w.body(cid).state.position - actrl.target().position).norm());
          }
          thrust = fmt(w.body(cid).thrust_cmd.sum());
        } else {
          f_err = fmt((w.body(fid).state.position - fctrl->target().position).norm());
          m_err = fmt((w.body(mid).state.position - mctrl->target().position).norm());
          thrust = fmt(w.body(fid).thrust_cmd.sum() + w.body(mid).thrust_cmd.sum());
        }
        res.telemetry.row({fmt(t), to_string(fsm.state()), fmt(rel.r.x()), fmt(rel.r.y()),
                           fmt(rel.r.z()), fmt(rel.psi), f_err, m_err, c_err, thrust,
                           fmt(unit_mode && spec.use_transition ? ts_f.last_weight : 1.0)});

        if (released && fsm.state() == FsmStateId::Standby) {
          const double ef = (w.body(fid).state.position - fctrl->target().position).norm();
          const double em = (w.body(mid).state.position - mctrl->target().position).norm();
          if (stable.update(ef < 0.2 && em < 0.2, t, kControlPeriod, 1.0) &&
              success_time < 0) {
            success_time = t;
            log_event(t, "standby", "both units stable after separation");
          }
        }
      }

      if (success_time >= 0 && t > success_time + 0.5) break;
      w.step();
    }
  } catch (const SimDiverged& e) {
    res.diverged = true;
    res.summary["failure_cause"] = e.what();
  }

  res.success = !res.diverged && success_time >= 0;
  if (!res.success && !res.diverged) res.summary["failure_cause"] = "timeout";
  res.summary["success"] = res.success;
  res.summary["duration_simulated"] = w.time();
  Json& m = res.summary["metrics"];
  m["success_time"] = success_time;
  m["fsm_transitions"] = static_cast<long>(fsm.events().size());
  res.events_jsonl = events;
  for (const auto& ev : fsm.events()) {
    Json e;
    e["t"] = ev.time;
    e["state"] = to_string(ev.state);
    e["note"] = ev.note;
    e["cond_safe"] = ev.cond_safe;
    e["cond_capture"] = ev.cond_capture;
    res.events_jsonl += e.dump() + "\n";
  }
  return res;
}

// ---------------------------------------------------------------------------
// Valve torque: analytic yaw capability plus a flown load ramp on both craft.

namespace scenario_detail {

struct ValveArm {
  double max_sustained_torque = 0.0;  // N m held with small yaw error
  double max_yaw_error = 0.0;         // rad over the full profile
  bool diverged = false;
};

inline ValveArm run_valve_arm(const ScenarioSpec& spec, bool assembled, Table* telemetry) {
  ValveArm out;
  const AirframeModel unit = spec.unit.build();
  const AirframeModel model = assembled ? make_assembled(unit, spec.separation) : unit;
  const std::string arm_name = assembled ? "assembled" : "unit";

  World w;
  BodyState st;
  st.position = Vec3(0.0, 0.0, 1.0);
  st.rotation = assembled ? Mat3::Identity() : static_thrust_frame(unit).R_C;
  const int id = w.add_body(model, st);

  Rng master(spec.seed);
  Rng rng = master.split(assembled ? 4 : 5);
  Sensor sensor(spec.noise);

  std::optional<UnitController> uctrl;
  std::optional<AssembledController> actrl;
  TrackingTarget tgt;
  tgt.position = st.position;
  if (assembled) {
    actrl.emplace(model);
    actrl->set_target(tgt);
  } else {
    uctrl.emplace(model);
    uctrl->set_target(tgt);
  }

  const double t0 = spec.request_time;           // settle, then ramp
  const double ramp = 8.0;                       // s to reach the full load
  const double t_end = spec.effective_duration();
  const long steps = static_cast<long>(t_end * 1000.0);

  auto applied = [&](double t) {
    if (t <= t0) return 0.0;
    return spec.valve_torque * std::min((t - t0) / ramp, 1.0);
  };

  try {
    for (long k = 0; k <= steps; ++k) {
      const double t = w.time();
      w.body(id).ext_torque_body = Vec3(0.0, 0.0, applied(t));
      if (k % kStepsPerControl == 0) {
        const Observation obs = sensor.sample(w.body(id).state, t, rng);
        const VecX lam = assembled ? actrl->tick(obs) : uctrl->tick(obs);
        w.set_thrusts(id, lam);

        const double yaw_err = std::abs(wrap_pi(yaw_of(w.body(id).state.rotation) - tgt.yaw));
        out.max_yaw_error = std::max(out.max_yaw_error, yaw_err);
        if (yaw_err < 0.3) {
          out.max_sustained_torque = std::max(out.max_sustained_torque, applied(t));
        }
        if (telemetry) {
          telemetry->row({scenario_detail::fmt(t), arm_name, scenario_detail::fmt(applied(t)),
                          scenario_detail::fmt(yaw_err), scenario_detail::fmt(lam.sum())});
        }
      }
      w.step();
    }
  } catch (const SimDiverged&) {
    out.diverged = true;  // the overloaded arm spinning up is an expected end
  }
  return out;
}

}  // namespace scenario_detail

inline ScenarioResult run_valve_torque(const ScenarioSpec& spec) {
  using namespace scenario_detail;
  ScenarioResult res;
  res.summary = base_summary(spec);
  res.telemetry.header = {"time", "arm", "applied_torque", "yaw_err", "thrust_total"};

  const AirframeModel unit = spec.unit.build();
  const AirframeModel pair = make_assembled(unit, spec.separation);
  const double unit_cap = torque_support_along(unit, Vec3::UnitZ());
  const double pair_cap = torque_support_along(pair, Vec3::UnitZ());
  const double ratio = unit_cap > 1e-12 ? pair_cap / unit_cap : 0.0;

  const ValveArm assembled = run_valve_arm(spec, true, &res.telemetry);
  const ValveArm single = run_valve_arm(spec, false, &res.telemetry);

  res.diverged = assembled.diverged;
  if (res.diverged) res.summary["failure_cause"] = "assembled arm diverged under load";
  res.success = !res.diverged && ratio >= 4.0 && assembled.max_yaw_error < 0.15;
  res.summary["success"] = res.success;
  res.summary["duration_simulated"] = spec.effective_duration();
  Json& m = res.summary["metrics"];
  m["unit_yaw_capability"] = unit_cap;
  m["assembled_yaw_capability"] = pair_cap;
  m["capability_ratio"] = ratio;
  m["target_torque"] = spec.valve_torque;
  m["assembled_max_yaw_error"] = assembled.max_yaw_error;
  m["assembled_sustained_torque"] = assembled.max_sustained_torque;
  m["unit_sustained_torque"] = single.max_sustained_torque;
  m["unit_max_yaw_error"] = single.max_yaw_error;
  return res;
}

// ---------------------------------------------------------------------------
// Dispatcher and plotting

inline ScenarioResult run_scenario(const ScenarioSpec& spec) {
  spec.validate();
  if (spec.scenario == "circle_unit") return run_circle(spec, false);
  if (spec.scenario == "circle_assembled") return run_circle(spec, true);
  if (spec.scenario == "assembly") return run_assembly(spec);
  if (spec.scenario == "disassembly") return run_disassembly(spec);
  if (spec.scenario == "transition_ablation") return run_transition_ablation(spec);
  if (spec.scenario == "valve_torque") return run_valve_torque(spec);
  throw ConfigError("unknown scenario '" + spec.scenario + "'");
}

// Groups numeric telemetry columns against the time column and renders one
// plot per group.  A categorical `arm` column splits each group into one
// series per category.  Returns (name, svg) pairs.
inline std::vector<std::pair<std::string, std::string>> plot_table(const Table& table,
                                                                   const std::string& stem) {
  std::vector<std::pair<std::string, std::string>> out;
  if (table.header.empty() || table.rows.empty()) return out;

  auto numeric = [&](size_t col) {
    for (const auto& r : table.rows) {
      if (col >= r.size() || r[col].empty()) continue;
      char* end = nullptr;
      std::strtod(r[col].c_str(), &end);
      if (end == r[col].c_str() || *end != '\0') return false;
    }
    return true;
  };

  int arm_col = -1;
  for (size_t c = 0; c < table.header.size(); ++c) {
    if (table.header[c] == "arm" || table.header[c] == "state") arm_col = static_cast<int>(c);
  }
  std::vector<std::string> categories;
  if (arm_col >= 0) {
    for (const auto& r : table.rows) {
      const std::string& v = r[static_cast<size_t>(arm_col)];
      bool seen = false;
      for (const auto& c : categories) seen = seen || c == v;
      if (!seen) categories.push_back(v);
    }
  }

  auto strip_index = [](const std::string& name) {
    size_t e = name.size();
    while (e > 0 && (std::isdigit(static_cast<unsigned char>(name[e - 1])) || name[e - 1] == '_')) {
      --e;
    }
    return e > 0 ? name.substr(0, e) : name;
  };

  // Build column groups in header order.
  std::vector<std::pair<std::string, std::vector<size_t>>> groups;
  for (size_t c = 1; c < table.header.size(); ++c) {
    if (static_cast<int>(c) == arm_col || !numeric(c)) continue;
    const std::string g = strip_index(table.header[c]);
    bool found = false;
    for (auto& [name, cols] : groups) {
      if (name == g) {
        cols.push_back(c);
        found = true;
      }
    }
    if (!found) groups.push_back({g, {c}});
  }

  for (const auto& [gname, cols] : groups) {
    std::vector<Series> series;
    for (size_t c : cols) {
      if (arm_col >= 0 && categories.size() > 1) {
        for (const auto& cat : categories) {
          Series s;
          s.label = table.header[c] + " (" + cat + ")";
          for (const auto& r : table.rows) {
            if (r[static_cast<size_t>(arm_col)] != cat || r[c].empty()) continue;
            s.x.push_back(std::strtod(r[0].c_str(), nullptr));
            s.y.push_back(std::strtod(r[c].c_str(), nullptr));
          }
          if (!s.x.empty()) series.push_back(std::move(s));
        }
      } else {
        Series s;
        s.label = table.header[c];
        for (const auto& r : table.rows) {
          if (r[c].empty()) continue;
          s.x.push_back(std::strtod(r[0].c_str(), nullptr));
          s.y.push_back(std::strtod(r[c].c_str(), nullptr));
        }
        if (!s.x.empty()) series.push_back(std::move(s));
      }
    }
    if (series.empty()) continue;
    out.push_back({stem + "_" + gname + ".svg",
                   render_line_plot(gname + " vs " + table.header[0], table.header[0], gname,
                                    series)});
  }
  return out;
}

}  // namespace tiltdock
