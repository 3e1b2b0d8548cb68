#pragma once

#include <string>
#include <vector>

#include "tiltdock/core.hpp"

namespace tiltdock {

struct Pose {
  Vec3 position = Vec3::Zero();
  Mat3 rotation = Mat3::Identity();
};

// Spherical tilt convention shared by every module:
//   u = (sin(alpha) cos(beta), sin(alpha) sin(beta), cos(alpha)),
// alpha from the body z-axis, beta measured in the body x-y plane.
inline Vec3 rotor_direction_from_angles(double alpha, double beta) {
  return {std::sin(alpha) * std::cos(beta),
          std::sin(alpha) * std::sin(beta),
          std::cos(alpha)};
}

struct RotorGeometry {
  Vec3 position = Vec3::Zero();   // m, in the body CoG frame
  Vec3 direction = Vec3::UnitZ(); // unit thrust direction
  double alpha = 0.0;             // rad
  double beta = 0.0;              // rad
  double sigma = 0.0;             // counter-torque coefficient, 1/m
  double max_thrust = 0.0;        // N

  static RotorGeometry from_angles(const Vec3& p, double alpha, double beta,
                                   double sigma, double max_thrust) {
    RotorGeometry r;
    r.position = p;
    r.direction = rotor_direction_from_angles(alpha, beta);
    r.alpha = alpha;
    r.beta = beta;
    r.sigma = sigma;
    r.max_thrust = max_thrust;
    return r;
  }
};

struct AirframeModel {
  std::string name;
  double mass = 0.0;              // kg
  Mat3 inertia = Mat3::Zero();    // kg m^2, about CoG
  std::vector<RotorGeometry> rotors;
  double gravity = kGravity;      // m/s^2
  bool counter_torque = false;    // include sigma_i * u_i in torque generation

  int rotor_count() const { return static_cast<int>(rotors.size()); }

  double max_thrust() const {
    double m = 0.0;
    for (const auto& r : rotors) m = std::max(m, r.max_thrust);
    return m;
  }

  void validate() const {
    if (mass <= 0.0) throw std::invalid_argument("airframe: mass must be positive");
    if (rotors.empty()) throw std::invalid_argument("airframe: needs at least one rotor");
    if ((inertia - inertia.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
      throw std::invalid_argument("airframe: inertia must be symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Mat3> es(inertia);
    if (es.eigenvalues().minCoeff() <= 0.0) {
      throw std::invalid_argument("airframe: inertia must be positive-definite");
    }
    for (const auto& r : rotors) {
      if (std::abs(r.direction.norm() - 1.0) > 1e-9) {
        throw std::invalid_argument("airframe: rotor direction must be unit");
      }
      if (r.max_thrust <= 0.0) {
        throw std::invalid_argument("airframe: max thrust must be positive");
      }
    }
  }
};

// Solid-cuboid inertia about the centroid.
inline Mat3 cuboid_inertia(double mass, double sx, double sy, double sz) {
  Mat3 i = Mat3::Zero();
  i(0, 0) = mass / 12.0 * (sy * sy + sz * sz);
  i(1, 1) = mass / 12.0 * (sx * sx + sz * sz);
  i(2, 2) = mass / 12.0 * (sx * sx + sy * sy);
  return i;
}

// Rigid composition of two airframes. `relative` is the pose of b's CoG
// frame expressed in a's CoG frame; the combined frame keeps a's axes with
// origin at the joint CoG.
inline AirframeModel combined_model(const AirframeModel& a, const AirframeModel& b,
                                    const Pose& relative) {
  AirframeModel c;
  c.name = a.name + "+" + b.name;
  c.mass = a.mass + b.mass;
  c.gravity = a.gravity;
  c.counter_torque = a.counter_torque || b.counter_torque;

  const Vec3 cog = (b.mass * relative.position) / c.mass;  // a's CoG at origin

  auto shift_inertia = [](const Mat3& i, double m, const Vec3& d) {
    return Mat3(i + m * (d.squaredNorm() * Mat3::Identity() - d * d.transpose()));
  };
  const Mat3 ib = relative.rotation * b.inertia * relative.rotation.transpose();
  c.inertia = shift_inertia(a.inertia, a.mass, -cog) +
              shift_inertia(ib, b.mass, relative.position - cog);

  c.rotors.reserve(a.rotors.size() + b.rotors.size());
  for (const auto& r : a.rotors) {
    RotorGeometry t = r;
    t.position = r.position - cog;
    c.rotors.push_back(t);
  }
  for (const auto& r : b.rotors) {
    RotorGeometry t = r;
    t.position = relative.rotation * r.position + relative.position - cog;
    t.direction = relative.rotation * r.direction;
    c.rotors.push_back(t);
  }
  for (size_t i = 0; i < c.rotors.size(); ++i) {
    for (size_t j = i + 1; j < c.rotors.size(); ++j) {
      if ((c.rotors[i].position - c.rotors[j].position).norm() < 1e-3) {
        throw std::invalid_argument("combined_model: overlapping rotor positions");
      }
    }
  }
  return c;
}

struct UnitDesign {
  double alpha[4];
  double beta[4];
};

// Rotor tilt angles of the shipped unit craft, found by the constrained
// rotor-angle search for the 0.24 m square frame.
inline UnitDesign reference_design() {
  return {{0.45, 0.52, 0.52, 0.45}, {0.73, -2.1, 2.1, -0.73}};
}

inline constexpr double kUnitMass = 1.1;          // kg
inline constexpr double kUnitArm = 0.12;          // m, rotor x/y offset
inline constexpr double kUnitMaxThrust = 8.0;     // N per rotor
inline constexpr double kUnitSigma = 0.011;       // 1/m, |counter-torque coeff|
inline constexpr double kUnitBodyHeight = 0.08;   // m, for the cuboid inertia
inline constexpr double kDockedSeparation = 0.6;  // m, CoG-to-CoG when docked

// Rotor corner order (counter-clockwise from +x,+y) and alternating spin
// directions, fixed for all units.
inline Vec3 rotor_corner(int i) {
  static const double sx[4] = {1.0, -1.0, -1.0, 1.0};
  static const double sy[4] = {1.0, 1.0, -1.0, -1.0};
  return {sx[i] * kUnitArm, sy[i] * kUnitArm, 0.0};
}

inline double rotor_sigma(int i) { return (i % 2 == 0) ? -kUnitSigma : kUnitSigma; }

struct UnitParams {
  double mass = kUnitMass;
  double arm = kUnitArm;
  double max_thrust = kUnitMaxThrust;
  double sigma = kUnitSigma;
  double body_height = kUnitBodyHeight;
};

inline AirframeModel make_unit(const UnitDesign& d, const UnitParams& p,
                               const std::string& name = "unit", bool counter_torque = true) {
  AirframeModel m;
  m.name = name;
  m.mass = p.mass;
  m.inertia = cuboid_inertia(p.mass, 2 * p.arm, 2 * p.arm, p.body_height);
  m.counter_torque = counter_torque;
  for (int i = 0; i < 4; ++i) {
    const Vec3 corner = rotor_corner(i) / kUnitArm * p.arm;
    const double sgn = (i % 2 == 0) ? -1.0 : 1.0;
    m.rotors.push_back(RotorGeometry::from_angles(corner, d.alpha[i], d.beta[i],
                                                  sgn * p.sigma, p.max_thrust));
  }
  return m;
}

inline AirframeModel make_unit(const UnitDesign& d, const std::string& name = "unit",
                               bool counter_torque = true) {
  return make_unit(d, UnitParams{}, name, counter_torque);
}

inline AirframeModel reference_unit() { return make_unit(reference_design()); }

// Flat (untilted) quad for tests and degenerate cases.
inline AirframeModel make_flat_quad(double mass = kUnitMass, double arm = kUnitArm,
                                    double max_thrust = kUnitMaxThrust) {
  AirframeModel m;
  m.name = "flat_quad";
  m.mass = mass;
  m.inertia = cuboid_inertia(mass, 2 * arm, 2 * arm, kUnitBodyHeight);
  for (int i = 0; i < 4; ++i) {
    m.rotors.push_back(RotorGeometry::from_angles(
        rotor_corner(i) / kUnitArm * arm, 0.0, 0.0, rotor_sigma(i), max_thrust));
  }
  return m;
}

// Docked pair: `a` (female) as-is at -sep/2, `b` (male) yawed by pi at +sep/2,
// ports facing each other. Frame axes follow the female unit.
inline Pose docked_pose(double separation = kDockedSeparation) {
  Pose p;
  p.position = Vec3(separation, 0.0, 0.0);
  p.rotation = rot_z(kPi);
  return p;
}

inline AirframeModel make_assembled(const AirframeModel& unit,
                                    double separation = kDockedSeparation) {
  AirframeModel c = combined_model(unit, unit, docked_pose(separation));
  c.name = unit.name + "_assembled";
  return c;
}

}  // namespace tiltdock
