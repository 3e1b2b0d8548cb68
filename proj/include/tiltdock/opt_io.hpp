#pragma once

// JSON (de)serialization for the tilt-angle search problem and its result.

#include <string>

#include "tiltdock/io.hpp"
#include "tiltdock/optimizer.hpp"

namespace tiltdock {

inline Json opt_problem_to_json(const OptProblem& p) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["w1"] = p.w1;
  j["w2"] = p.w2;
  j["mass"] = p.params.mass;
  j["arm"] = p.params.arm;
  j["max_thrust"] = p.params.max_thrust;
  j["sigma"] = p.params.sigma;
  j["body_height"] = p.params.body_height;
  j["des_accel"] = p.des_accel;
  j["gravity"] = p.gravity;
  j["separation"] = p.separation;
  j["counter_torque"] = p.counter_torque;
  j["alpha_min"] = p.bounds.alpha_min;
  j["alpha_max"] = p.bounds.alpha_max;
  j["beta_min"] = p.bounds.beta_min;
  j["beta_max"] = p.bounds.beta_max;
  j["seed"] = p.seed;
  j["population"] = p.population;
  j["parents"] = p.parents;
  j["max_evals"] = p.max_evals;
  j["restarts"] = p.restarts;
  j["tol_hover_torque"] = p.tol_hover_torque;
  j["tol_tilt"] = p.tol_tilt;
  return j;
}

inline OptProblem opt_problem_from_json(const Json& j) {
  schema::check_keys(j,
                     {"schema_version", "w1", "w2", "mass", "arm", "max_thrust", "sigma",
                      "body_height", "des_accel", "gravity", "separation", "counter_torque",
                      "alpha_min", "alpha_max", "beta_min", "beta_max", "seed", "population",
                      "parents", "max_evals", "restarts", "tol_hover_torque", "tol_tilt"},
                     "");
  schema::check_schema_version(j, "");
  OptProblem p;
  p.w1 = schema::get_number(j, "w1", p.w1, "");
  p.w2 = schema::get_number(j, "w2", p.w2, "");
  p.params.mass = schema::get_number(j, "mass", p.params.mass, "");
  p.params.arm = schema::get_number(j, "arm", p.params.arm, "");
  p.params.max_thrust = schema::get_number(j, "max_thrust", p.params.max_thrust, "");
  p.params.sigma = schema::get_number(j, "sigma", p.params.sigma, "");
  p.params.body_height = schema::get_number(j, "body_height", p.params.body_height, "");
  p.des_accel = schema::get_number(j, "des_accel", p.des_accel, "");
  p.gravity = schema::get_number(j, "gravity", p.gravity, "");
  p.separation = schema::get_number(j, "separation", p.separation, "");
  p.counter_torque = schema::get_bool(j, "counter_torque", p.counter_torque, "");
  p.bounds.alpha_min = schema::get_number(j, "alpha_min", p.bounds.alpha_min, "");
  p.bounds.alpha_max = schema::get_number(j, "alpha_max", p.bounds.alpha_max, "");
  p.bounds.beta_min = schema::get_number(j, "beta_min", p.bounds.beta_min, "");
  p.bounds.beta_max = schema::get_number(j, "beta_max", p.bounds.beta_max, "");
  if (j.contains("seed")) {
    const Json& v = j.at("seed");
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      throw ConfigError("'seed' must be a nonnegative integer");
    }
    p.seed = v.get<std::uint64_t>();
  }
  p.population = static_cast<int>(schema::get_number(j, "population", p.population, ""));
  p.parents = static_cast<int>(schema::get_number(j, "parents", p.parents, ""));
  p.max_evals = static_cast<long>(schema::get_number(j, "max_evals", double(p.max_evals), ""));
  p.restarts = static_cast<int>(schema::get_number(j, "restarts", p.restarts, ""));
  p.tol_hover_torque = schema::get_number(j, "tol_hover_torque", p.tol_hover_torque, "");
  p.tol_tilt = schema::get_number(j, "tol_tilt", p.tol_tilt, "");
  p.validate();
  return p;
}

inline Json opt_result_to_json(const OptResult& r) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["feasible"] = r.feasible;
  j["objective"] = r.S;
  Json alpha = Json::array(), beta = Json::array();
  for (int i = 0; i < 4; ++i) {
    alpha.push_back(r.design.alpha[static_cast<size_t>(i)]);
    beta.push_back(r.design.beta[static_cast<size_t>(i)]);
  }
  j["alpha"] = alpha;
  j["beta"] = beta;
  j["f_min_unit"] = r.f_min_unit;
  j["tau_min_unit"] = r.tau_min_unit;
  j["f_min_assembled"] = r.f_min_assembled;
  j["tau_min_assembled"] = r.tau_min_assembled;
  j["residual_thrust_margin"] = r.r3;
  j["residual_hover_torque"] = r.r4;
  j["residual_tilt"] = r.r5;
  j["evaluations"] = r.evaluations;
  j["seed"] = r.seed;
  return j;
}

}  // namespace tiltdock
