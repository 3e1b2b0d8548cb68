#pragma once

#include <algorithm>
#include <limits>
#include <utility>
#include <vector>

#include "tiltdock/alloc.hpp"

namespace tiltdock {

struct DegenerateForcePolytope : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateTorquePolytope : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FeasibilityReport {
  double f_min = 0.0;    // N
  double tau_min = 0.0;  // N m
  std::pair<int, int> f_pair{-1, -1};
  std::pair<int, int> tau_pair{-1, -1};
  int faces_inspected = 0;
  bool degenerate_torque_axis = false;
};

namespace detail {

// Signed inscribed-sphere radius of the zonotope spanned by
// {lambda in [0, max_thrust]} * gens, measured from `offset`.
// Face normals come from generator cross products; both signs of each
// normal are covered by iterating ordered pairs. A negative result means
// the offset point lies outside the attainable set.
struct PolytopeMin {
  double value = std::numeric_limits<double>::infinity();
  std::pair<int, int> pair{-1, -1};
  int faces = 0;
};

inline PolytopeMin polytope_min(const std::vector<Vec3>& gens,
                                const std::vector<double>& max_thrust,
                                const Vec3& offset) {
  PolytopeMin out;
  const int n = static_cast<int>(gens.size());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      Vec3 h = gens[i].cross(gens[j]);
      const double norm = h.norm();
      if (norm < 1e-12) continue;
      h /= norm;
      double support = 0.0;
      for (int k = 0; k < n; ++k) {
        support += std::max(0.0, max_thrust[k] * h.dot(gens[k]));
      }
      const double d = support - h.dot(offset);
      ++out.faces;
      if (d < out.value) {
        out.value = d;
        out.pair = {i, j};
      }
    }
  }
  return out;
}

inline std::vector<double> thrust_limits(const AirframeModel& m) {
  std::vector<double> t;
  t.reserve(m.rotors.size());
  for (const auto& r : m.rotors) t.push_back(r.max_thrust);
  return t;
}

inline std::vector<Vec3> force_generators(const AirframeModel& m) {
  std::vector<Vec3> u;
  u.reserve(m.rotors.size());
  for (const auto& r : m.rotors) u.push_back(r.direction);
  return u;
}

}  // namespace detail

// Guaranteed minimum control force: radius of the sphere centred on the
// hover load m*g*e_z inscribed in the attainable-force zonotope.
inline double guaranteed_min_force(const AirframeModel& m, FeasibilityReport* rep = nullptr) {
  const auto gens = detail::force_generators(m);
  const auto lim = detail::thrust_limits(m);
  const Vec3 offset(0.0, 0.0, m.mass * m.gravity);
  const auto r = detail::polytope_min(gens, lim, offset);
  if (r.faces == 0) {
    throw DegenerateForcePolytope("all rotor directions parallel");
  }
  if (rep) {
    rep->f_min = r.value;
    rep->f_pair = r.pair;
    rep->faces_inspected += r.faces;
  }
  return r.value;
}

// Guaranteed minimum control torque: inscribed-sphere radius of the
// attainable-torque zonotope about zero.
inline double guaranteed_min_torque(const AirframeModel& m, FeasibilityReport* rep = nullptr) {
  const auto gens = torque_generators(m);
  const auto lim = detail::thrust_limits(m);
  const auto r = detail::polytope_min(gens, lim, Vec3::Zero());
  if (r.faces == 0) {
    throw DegenerateTorquePolytope("all torque generators parallel");
  }
  if (rep) {
    rep->tau_min = r.value;
    rep->tau_pair = r.pair;
    rep->faces_inspected += r.faces;
    rep->degenerate_torque_axis = r.value < 1e-12;
  }
  return r.value;
}

inline FeasibilityReport feasibility_report(const AirframeModel& m) {
  FeasibilityReport rep;
  guaranteed_min_force(m, &rep);
  guaranteed_min_torque(m, &rep);
  return rep;
}

enum class WrenchKind { Force, Torque };

// Brute-force check of the geometric metrics: sample unit directions on a
// Fibonacci sphere and take the minimum support distance. Never below the
// face-enumeration value; converges to it from above.
inline double oracle_min_wrench(const AirframeModel& m, WrenchKind which, int samples) {
  if (samples < 1000) {
    throw std::invalid_argument("oracle_min_wrench: need at least 1000 samples");
  }
  const auto gens =
      which == WrenchKind::Force ? detail::force_generators(m) : torque_generators(m);
  const auto lim = detail::thrust_limits(m);
  const Vec3 offset = which == WrenchKind::Force
                          ? Vec3(0.0, 0.0, m.mass * m.gravity)
                          : Vec3::Zero();
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  double best = std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    const double z = 1.0 - 2.0 * (s + 0.5) / samples;
    const double rad = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double ang = golden * s;
    const Vec3 h(rad * std::cos(ang), rad * std::sin(ang), z);
    double support = 0.0;
    for (size_t k = 0; k < gens.size(); ++k) {
      support += std::max(0.0, lim[k] * h.dot(gens[k]));
    }
    best = std::min(best, support - h.dot(offset));
  }
  return best;
}

// Sampling oracle with local refinement: the coarse spiral scan above
// converges only as samples^-1/2 when the minimizing direction sits in a
// steep conical region, so the best coarse directions are polished by a
// shrinking tangent-plane pattern search. Uses support evaluations only —
// no face enumeration — so it stays an independent check of the geometric
// face-normal computation.
inline double oracle_min_wrench_refined(const AirframeModel& m, WrenchKind which, int samples) {
  if (samples < 1000) {
    throw std::invalid_argument("oracle_min_wrench_refined: need at least 1000 samples");
  }
  const auto gens =
      which == WrenchKind::Force ? detail::force_generators(m) : torque_generators(m);
  const auto lim = detail::thrust_limits(m);
  const Vec3 offset = which == WrenchKind::Force
                          ? Vec3(0.0, 0.0, m.mass * m.gravity)
                          : Vec3::Zero();
  const auto value = [&](const Vec3& h) {
    double support = 0.0;
    for (size_t k = 0; k < gens.size(); ++k) {
      support += std::max(0.0, lim[k] * h.dot(gens[k]));
    }
    return support - h.dot(offset);
  };

  // Coarse pass: keep the best few seed directions from the spiral scan.
  constexpr int kSeeds = 64;
  std::vector<std::pair<double, Vec3>> best;
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  for (int s = 0; s < samples; ++s) {
    const double z = 1.0 - 2.0 * (s + 0.5) / samples;
    const double rad = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double ang = golden * s;
    const Vec3 h(rad * std::cos(ang), rad * std::sin(ang), z);
    const double v = value(h);
    if (best.size() < kSeeds) {
      best.emplace_back(v, h);
      std::sort(best.begin(), best.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
    } else if (v < best.back().first) {
      best.back() = {v, h};
      std::sort(best.begin(), best.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
    }
  }

  // Polish each seed: evaluate a ring of tangent perturbations, halve the
  // radius whenever no neighbor improves meaningfully. The iteration cap
  // bounds the cost when descent crawls along a piecewise-linear valley.
  double out = best.front().first;
  for (auto& [v, h] : best) {
    double step = 0.1;
    for (int iter = 0; iter < 400 && step > 1e-9; ++iter) {
      const Vec3 any = std::abs(h.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX();
      const Vec3 e1 = h.cross(any).normalized();
      const Vec3 e2 = h.cross(e1);
      bool improved = false;
      for (int k = 0; k < 8; ++k) {
        const double phi = kPi * k / 4.0;
        const Vec3 cand = (h + step * (std::cos(phi) * e1 + std::sin(phi) * e2)).normalized();
        const double cv = value(cand);
        if (cv < v - 1e-12 * (1.0 + std::abs(v))) {
          v = cv;
          h = cand;
          improved = true;
        }
      }
      if (!improved) step *= 0.5;
    }
    out = std::min(out, v);
  }
  return out;
}

// Attainable torque magnitude along +/-axis (the smaller side); used for
// the docked-vs-single torque capability comparison.
inline double torque_support_along(const AirframeModel& m, const Vec3& axis) {
  const auto gens = torque_generators(m);
  const Vec3 h = axis.normalized();
  double pos = 0.0, neg = 0.0;
  for (size_t k = 0; k < gens.size(); ++k) {
    pos += std::max(0.0, m.rotors[k].max_thrust * h.dot(gens[k]));
    neg += std::max(0.0, m.rotors[k].max_thrust * -h.dot(gens[k]));
  }
  return std::min(pos, neg);
}

}  // namespace tiltdock
