#include <catch2/catch_amalgamated.hpp>

#include "tiltdock/airframe.hpp"
#include "tiltdock/alloc.hpp"
#include "tiltdock/feasibility.hpp"
#include "tiltdock/rng.hpp"

using namespace tiltdock;

namespace {

// Symmetric equal-tilt craft whose uniform hover torque is exactly balanced.
AirframeModel balanced_unit() {
  return make_unit({{0.5, 0.5, 0.5, 0.5}, {2.35, -1.26, 1.26, -2.35}}, "balanced");
}

}  // namespace

TEST_CASE("rotor direction convention") {
  CHECK(rotor_direction_from_angles(0.0, 1.2345).isApprox(Vec3(0, 0, 1), 1e-12));
  CHECK(rotor_direction_from_angles(kPi / 2, 0.0).isApprox(Vec3(1, 0, 0), 1e-12));
  const Vec3 u = rotor_direction_from_angles(0.45, 0.73);
  CHECK(u.x() == Catch::Approx(0.3242).margin(1e-4));
  CHECK(u.y() == Catch::Approx(0.2901).margin(1e-4));
  CHECK(u.z() == Catch::Approx(0.9004).margin(1e-4));
  for (double a : {0.1, 0.45, 0.9}) {
    for (double b : {-3.0, 0.0, 2.1}) {
      CHECK(rotor_direction_from_angles(a, b).norm() == Catch::Approx(1.0).margin(1e-12));
    }
  }
}

TEST_CASE("airframe validation") {
  AirframeModel m = reference_unit();
  CHECK_NOTHROW(m.validate());

  AirframeModel bad = m;
  bad.mass = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = m;
  bad.inertia(0, 1) = 0.5;  // asymmetric
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = m;
  bad.rotors[2].direction *= 1.1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("allocation matrices") {
  SECTION("flat quad") {
    const auto a = build_allocation(make_flat_quad());
    CHECK(a.Q_tran.topRows(2).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.Q_tran.row(2).isApprox(Eigen::RowVector4d::Ones(), 1e-15));
    for (int i = 0; i < 4; ++i) {
      const Vec3 p = rotor_corner(i);
      CHECK(a.Q_rot.col(i).isApprox(Vec3(p.y(), -p.x(), 0.0), 1e-15));
    }
  }
  SECTION("reference unit hover torque imbalance") {
    const auto a = build_allocation(reference_unit());
    const Vec3 residual = a.Q_rot * Eigen::Vector4d::Ones();
    CHECK(residual.norm() == Catch::Approx(0.0078307).margin(1e-6));
    CHECK(std::abs(residual.x()) < 1e-15);
    CHECK(std::abs(residual.z()) < 1e-12);
  }
  SECTION("balanced unit hover torque is zero") {
    const auto a = build_allocation(balanced_unit());
    CHECK((a.Q_rot * Eigen::Vector4d::Ones()).norm() < 1e-14);
  }
  SECTION("counter-torque augmentation") {
    const auto m = reference_unit();
    const auto plain = build_allocation(m, false);
    const auto with_ct = build_allocation(m, true);
    for (int i = 0; i < 4; ++i) {
      const Vec3 expect = plain.Q_rot.col(i) + m.rotors[i].sigma * m.rotors[i].direction;
      CHECK(with_ct.Q_rot.col(i).isApprox(expect, 1e-15));
    }
    const auto gens = torque_generators(m);
    for (int i = 0; i < 4; ++i) CHECK(gens[i].isApprox(Vec3(with_ct.Q_rot.col(i)), 1e-15));
  }
}

TEST_CASE("wrench from thrusts") {
  const auto m = reference_unit();
  const auto a = build_allocation(m);

  CHECK(wrench_from_thrusts(a, Eigen::Vector4d::Zero()).force.norm() == 0.0);

  const auto flat = build_allocation(make_flat_quad());
  const auto w = wrench_from_thrusts(flat, Eigen::Vector4d::Ones());
  CHECK(w.force.isApprox(Vec3(0, 0, 4), 1e-12));
  CHECK(w.torque.norm() < 1e-15);

  const auto frame = static_thrust_frame(m);
  const auto hover = wrench_from_thrusts(a, static_thrust_vector(frame));
  CHECK(hover.force.norm() == Catch::Approx(m.mass * m.gravity).margin(1e-9));
  CHECK(hover.torque.norm() == Catch::Approx(0.023848).margin(1e-4));

  SECTION("linearity") {
    Rng rng(7);
    for (int t = 0; t < 20; ++t) {
      Eigen::Vector4d l1, l2;
      for (int i = 0; i < 4; ++i) {
        l1(i) = rng.uniform(-5, 5);
        l2(i) = rng.uniform(-5, 5);
      }
      const auto wa = wrench_from_thrusts(a, l1);
      const auto wb = wrench_from_thrusts(a, l2);
      const auto wc = wrench_from_thrusts(a, l1 + 2.0 * l2);
      CHECK((wa.force + 2 * wb.force - wc.force).norm() < 1e-12);
      CHECK((wa.torque + 2 * wb.torque - wc.torque).norm() < 1e-12);
    }
  }
  CHECK_THROWS_AS(wrench_from_thrusts(a, VecX::Ones(5)), std::invalid_argument);
}

TEST_CASE("combined model") {
  const auto unit = reference_unit();

  SECTION("mass and CoG at midpoint") {
    const auto c = make_assembled(unit);
    CHECK(c.mass == Catch::Approx(2.2).margin(1e-12));
    Vec3 lever = Vec3::Zero();
    for (const auto& r : c.rotors) lever += r.position;
    CHECK(lever.norm() < 1e-12);  // rotor centroid back at the joint CoG
    CHECK(c.rotor_count() == 8);
  }

  SECTION("identity mounting pairs directions exactly") {
    Pose rel;
    rel.position = Vec3(kDockedSeparation, 0, 0);
    const auto c = combined_model(unit, unit, rel);
    for (int i = 0; i < 4; ++i) {
      CHECK(c.rotors[i].direction.isApprox(c.rotors[i + 4].direction, 1e-15));
    }
  }

  SECTION("parallel-axis inertia") {
    const auto c = make_assembled(unit, 0.6);
    const double expect = 2.0 * unit.inertia(2, 2) + 2.0 * unit.mass * 0.3 * 0.3;
    CHECK(c.inertia(2, 2) == Catch::Approx(expect).margin(1e-9));
    // brute-force point-mass cross-check: quarter masses at the rotor sites
    double izz = 0.0;
    const double quarter = unit.mass / 4.0;
    for (const auto& r : c.rotors) {
      izz += quarter * (r.position.x() * r.position.x() + r.position.y() * r.position.y());
    }
    const double ring = 4 * quarter * (2 * kUnitArm * kUnitArm);
    CHECK(izz == Catch::Approx(2 * ring + 2 * unit.mass * 0.09).margin(1e-9));
  }

  SECTION("swap symmetry under pure translation") {
    Pose rel;
    rel.position = Vec3(0.6, 0, 0);
    Pose inv;
    inv.position = Vec3(-0.6, 0, 0);
    const auto c1 = combined_model(unit, unit, rel);
    const auto c2 = combined_model(unit, unit, inv);
    CHECK(c1.mass == c2.mass);
    CHECK(c1.inertia.isApprox(c2.inertia, 1e-12));
    for (int i = 0; i < 4; ++i) {
      CHECK(c1.rotors[i].position.isApprox(c2.rotors[i + 4].position, 1e-12));
      CHECK(c1.rotors[i + 4].position.isApprox(c2.rotors[i].position, 1e-12));
    }
  }

  SECTION("overlapping rotors rejected") {
    CHECK_THROWS_AS(combined_model(unit, unit, Pose{}), std::invalid_argument);
  }
}

TEST_CASE("static thrust frame") {
  SECTION("flat quad") {
    const auto t = static_thrust_frame(make_flat_quad());
    CHECK(t.lambda_s == Catch::Approx(kUnitMass * kGravity / 4.0).margin(1e-12));
    CHECK(t.R_C.isApprox(Mat3::Identity(), 1e-12));
  }
  SECTION("reference unit") {
    const auto m = reference_unit();
    const auto t = static_thrust_frame(m);
    CHECK(t.lambda_s == Catch::Approx(3.04557).margin(1e-5));
    const auto aa = axis_angle(t.R_C);
    CHECK(aa.angle == Catch::Approx(0.041424).margin(1e-5));
    CHECK(std::abs(aa.axis.y()) == Catch::Approx(1.0).margin(1e-9));  // pure pitch
    CHECK(t.residual_torque == Catch::Approx(0.023848).margin(1e-4));

    const auto a = build_allocation(m);
    CHECK((t.Q_tran_p - t.R_C * a.Q_tran).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((t.Q_rot_p - t.R_C * a.Q_rot).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((t.Q_tran_p * static_thrust_vector(t)).norm() ==
          Catch::Approx(m.mass * m.gravity).margin(1e-6));
  }
  SECTION("balanced unit satisfies the frame invariants tightly") {
    const auto t = static_thrust_frame(balanced_unit());
    CHECK((t.Q_rot_p * static_thrust_vector(t)).norm() < 1e-6);
  }
  SECTION("unbalanced config rejected") {
    const auto m = make_unit({{0.0, 0.0, 0.5, 0.5}, {0, 0, 0, 0}}, "lopsided");
    CHECK_THROWS_AS(static_thrust_frame(m), NoStaticHover);
  }
  SECTION("inverted thrust is singular") {
    AirframeModel m = make_flat_quad();
    for (auto& r : m.rotors) r.direction = -Vec3::UnitZ();
    CHECK_THROWS_AS(static_thrust_frame(m), SingularFrame);
  }
}

TEST_CASE("fully actuated allocation") {
  const auto assembled = make_assembled(reference_unit());
  const auto a = build_allocation(assembled);

  SECTION("zero wrench") {
    const VecX l = allocate_fully_actuated(a, WrenchVector{});
    CHECK(l.norm() < 1e-12);
  }
  SECTION("hover wrench round-trip and least-norm") {
    WrenchVector w;
    w.force = Vec3(0, 0, assembled.mass * assembled.gravity);
    const VecX l = allocate_fully_actuated(a, w);
    const auto back = wrench_from_thrusts(a, l);
    CHECK((back.force - w.force).norm() < 1e-9);
    CHECK(back.torque.norm() < 1e-9);
    VecX w6(6);
    w6 << w.force, w.torque;
    CHECK((l - pinv(a.Q) * w6).norm() < 1e-9);
  }
  SECTION("random round-trips") {
    Rng rng(3);
    for (int t = 0; t < 25; ++t) {
      WrenchVector w;
      for (int i = 0; i < 3; ++i) {
        w.force(i) = rng.uniform(-5, 5);
        w.torque(i) = rng.uniform(-1, 1);
      }
      const VecX l = allocate_fully_actuated(a, w);
      const auto back = wrench_from_thrusts(a, l);
      CHECK((back.force - w.force).norm() < 1e-9);
      CHECK((back.torque - w.torque).norm() < 1e-9);
    }
  }
  SECTION("rank deficiency rejected") {
    const auto flat = build_allocation(make_flat_quad());
    CHECK_THROWS_AS(allocate_fully_actuated(flat, WrenchVector{}), RankDeficient);
  }
}

TEST_CASE("under-actuated quad allocation") {
  const auto m = balanced_unit();
  const auto t = static_thrust_frame(m);
  const auto q = quad_allocation(t);

  SECTION("hover maps to static thrust") {
    const auto l = allocate_under_actuated(q, m.mass * m.gravity, Vec3::Zero());
    CHECK((l - static_thrust_vector(t)).norm() < 1e-9);
  }
  SECTION("yaw torque round-trip") {
    const auto l = allocate_under_actuated(q, 0.0, Vec3(0, 0, 0.1));
    Eigen::Vector4d rhs = q.A * l;
    CHECK(rhs(0) == Catch::Approx(0.0).margin(1e-9));
    CHECK(rhs(3) == Catch::Approx(0.1).margin(1e-9));
  }
  SECTION("coincident rotors are singular") {
    AirframeModel bad = m;
    bad.rotors[1] = bad.rotors[0];
    const auto tf = static_thrust_frame(bad, 1e9);
    CHECK_THROWS_AS(quad_allocation(tf), SingularAllocation);
  }
}

TEST_CASE("feasibility metrics reproduce the design table") {
  const auto unit = reference_unit();
  CHECK(guaranteed_min_force(unit) == Catch::Approx(2.9935).epsilon(1e-3));
  CHECK(guaranteed_min_torque(unit) == Catch::Approx(0.6420).epsilon(1e-3));

  const auto assembled = make_assembled(unit);
  CHECK(guaranteed_min_force(assembled) == Catch::Approx(6.9683).epsilon(1e-3));
  CHECK(guaranteed_min_torque(assembled) == Catch::Approx(2.9910).epsilon(1e-3));

  SECTION("counter-torque flag changes only the torque metric") {
    auto no_ct = make_unit(reference_design(), "unit", false);
    CHECK(guaranteed_min_force(no_ct) == Catch::Approx(2.9935).epsilon(1e-3));
    CHECK(guaranteed_min_torque(no_ct) == Catch::Approx(0.5588).epsilon(1e-3));
  }

  SECTION("report carries limiting faces") {
    const auto rep = feasibility_report(unit);
    CHECK(rep.f_min == Catch::Approx(2.9935).epsilon(1e-3));
    CHECK(rep.tau_min == Catch::Approx(0.6420).epsilon(1e-3));
    CHECK(rep.f_pair.first >= 0);
    CHECK(rep.faces_inspected > 0);
    CHECK_FALSE(rep.degenerate_torque_axis);
  }
}

TEST_CASE("feasibility degenerate cases") {
  const auto flat = make_flat_quad();
  CHECK_THROWS_AS(guaranteed_min_force(flat), DegenerateForcePolytope);

  // coplanar torque generators: zero guaranteed torque, flagged
  FeasibilityReport rep;
  CHECK(guaranteed_min_torque(flat, &rep) == Catch::Approx(0.0).margin(1e-12));
  CHECK(rep.degenerate_torque_axis);
}

TEST_CASE("feasibility scaling and rotation properties") {
  SECTION("torque scales linearly with thrust limit") {
    auto m = reference_unit();
    const double t1 = guaranteed_min_torque(m);
    for (auto& r : m.rotors) r.max_thrust *= 2.0;
    CHECK(guaranteed_min_torque(m) == Catch::Approx(2.0 * t1).margin(1e-9));
  }
  SECTION("force never shrinks when the limit grows") {
    auto m = reference_unit();
    const double f1 = guaranteed_min_force(m);
    for (auto& r : m.rotors) r.max_thrust *= 1.5;
    CHECK(guaranteed_min_force(m) >= f1 - 1e-12);
  }
  SECTION("common rotation invariance") {
    const auto m = reference_unit();
    const auto gens = torque_generators(m);
    const auto lim = detail::thrust_limits(m);
    const Mat3 r = from_euler_zyx(0.3, -0.2, 1.1);
    std::vector<Vec3> rotated;
    for (const auto& g : gens) rotated.push_back(r * g);
    const auto base = detail::polytope_min(gens, lim, Vec3::Zero());
    const auto rot = detail::polytope_min(rotated, lim, Vec3::Zero());
    CHECK(rot.value == Catch::Approx(base.value).margin(1e-9));

    const Vec3 off(0, 0, m.mass * m.gravity);
    std::vector<Vec3> dirs, dirs_rot;
    for (const auto& rr : m.rotors) {
      dirs.push_back(rr.direction);
      dirs_rot.push_back(r * rr.direction);
    }
    const auto fb = detail::polytope_min(dirs, lim, off);
    const auto fr = detail::polytope_min(dirs_rot, lim, r * off);
    CHECK(fr.value == Catch::Approx(fb.value).margin(1e-9));
  }
}

TEST_CASE("sampling oracle brackets the geometric metrics") {
  const auto unit = reference_unit();
  const double f = guaranteed_min_force(unit);
  const double tau = guaranteed_min_torque(unit);
  const double fo = oracle_min_wrench(unit, WrenchKind::Force, 100000);
  const double to = oracle_min_wrench(unit, WrenchKind::Torque, 100000);
  CHECK(fo >= f - 1e-9);
  CHECK(to >= tau - 1e-9);
  CHECK(fo <= f * 1.02);
  CHECK(to <= tau * 1.02);

  CHECK_THROWS_AS(oracle_min_wrench(unit, WrenchKind::Force, 10), std::invalid_argument);

  // For a degenerate polytope the sampled bound shrinks toward zero as the
  // grid refines but never reaches it (no sample lies exactly on the dead axis).
  const auto flat = make_flat_quad();
  const double coarse = oracle_min_wrench(flat, WrenchKind::Torque, 5000);
  CHECK(coarse < 0.05);
  CHECK(oracle_min_wrench(flat, WrenchKind::Torque, 200000) < coarse);
}

TEST_CASE("docked torque capability gain") {
  const auto unit = reference_unit();
  const auto assembled = make_assembled(unit);
  const double zu = torque_support_along(unit, Vec3::UnitZ());
  const double za = torque_support_along(assembled, Vec3::UnitZ());
  CHECK(zu == Catch::Approx(0.8409).epsilon(1e-3));
  CHECK(za == Catch::Approx(5.1328).epsilon(1e-3));
  CHECK(za / zu >= 4.0);
}
