#include <catch2/catch_amalgamated.hpp>

#include "tiltdock/control.hpp"
#include "tiltdock/fsm.hpp"
#include "tiltdock/riccati.hpp"
#include "tiltdock/rng.hpp"
#include "tiltdock/switching.hpp"

using namespace tiltdock;

namespace {

AirframeModel balanced_unit() {
  return make_unit({{0.5, 0.5, 0.5, 0.5}, {2.35, -1.26, 1.26, -2.35}}, "balanced");
}

double max_real_eig(const MatX& m) {
  return Eigen::EigenSolver<MatX>(m).eigenvalues().real().maxCoeff();
}

}  // namespace

TEST_CASE("riccati closed forms") {
  SECTION("scalar") {
    MatX a(1, 1), b(1, 1), m(1, 1), n(1, 1);
    a << 0;
    b << 1;
    m << 1;
    n << 1;
    CareSolution sol;
    const MatX k = lqr_gain(a, b, m, n, &sol);
    CHECK(sol.P(0, 0) == Catch::Approx(1.0).margin(1e-10));
    CHECK(k(0, 0) == Catch::Approx(1.0).margin(1e-10));
    CHECK(sol.residual < 1e-10);
  }
  SECTION("double integrator") {
    MatX a = MatX::Zero(2, 2), b = MatX::Zero(2, 1);
    a(0, 1) = 1;
    b(1, 0) = 1;
    const MatX m = MatX::Identity(2, 2);
    MatX n(1, 1);
    n << 1;
    CareSolution sol;
    const MatX k = lqr_gain(a, b, m, n, &sol);
    CHECK(k(0, 0) == Catch::Approx(1.0).margin(1e-9));
    CHECK(k(0, 1) == Catch::Approx(std::sqrt(3.0)).margin(1e-9));
    CHECK(sol.P(0, 0) == Catch::Approx(std::sqrt(3.0)).margin(1e-9));
    CHECK(sol.P(0, 1) == Catch::Approx(1.0).margin(1e-9));
    CHECK(sol.P(1, 1) == Catch::Approx(std::sqrt(3.0)).margin(1e-9));
  }
  SECTION("non-stabilizable pairs rejected") {
    MatX a(1, 1), b(1, 1), m(1, 1), n(1, 1);
    a << 0;
    b << 0;
    m << 1;
    n << 1;
    CHECK_THROWS_AS(solve_care(a, b, m, n), RiccatiError);  // integrator, no input
    a << 1;
    CHECK_THROWS_AS(solve_care(a, b, m, n), RiccatiError);  // unstable, no input
  }
  SECTION("dimension checks") {
    CHECK_THROWS_AS(solve_care(MatX::Zero(2, 2), MatX::Zero(3, 1), MatX::Identity(2, 2),
                               MatX::Identity(1, 1)),
                    std::invalid_argument);
  }
}

TEST_CASE("position pid") {
  PidGains g;
  g.kp = Vec3::Constant(2.0);
  PidState s;

  SECTION("zero error gives zero force") {
    const Vec3 f = pid_position(Vec3::Zero(), Vec3::Zero(), g, s, Mat3::Identity(), 1.1, 0.025);
    CHECK(f.norm() == 0.0);
  }
  SECTION("pure proportional") {
    const Vec3 f =
        pid_position(Vec3(0.1, 0, 0), Vec3::Zero(), g, s, Mat3::Identity(), 1.1, 0.025);
    CHECK(f.isApprox(Vec3(0.22, 0, 0), 1e-12));
  }
  SECTION("control-frame projection") {
    const Mat3 r = rot_z(kPi / 2);
    PidState s2;
    const Vec3 f = pid_position(Vec3(0.1, 0, 0), Vec3::Zero(), g, s2, r, 1.1, 0.025);
    CHECK(f.isApprox(r.transpose() * Vec3(0.22, 0, 0), 1e-12));
  }
  SECTION("integral clamp") {
    PidGains gi;
    gi.ki = Vec3::Constant(1.0);
    PidState si;
    si.integral_limit = 0.5;
    for (int i = 0; i < 1000; ++i) {
      pid_position(Vec3(10, 0, 0), Vec3::Zero(), gi, si, Mat3::Identity(), 1.0, 0.025);
    }
    CHECK(si.integral.x() == Catch::Approx(0.5));
  }
  SECTION("bad dt") {
    CHECK_THROWS_AS(pid_position(Vec3::Zero(), Vec3::Zero(), g, s, Mat3::Identity(), 1.0, 0.0),
                    std::invalid_argument);
  }
  SECTION("negative gains rejected") {
    PidGains bad;
    bad.kp = Vec3(-1, 0, 0);
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  }
}

TEST_CASE("attitude pid") {
  PidGains g;
  g.kp = Vec3::Constant(3.0);
  PidState s;
  const Mat3 inertia = Vec3(0.02, 0.03, 0.04).asDiagonal();

  SECTION("zero error, zero rate") {
    const Vec3 tau = pid_attitude(Vec3::Zero(), Vec3::Zero(), g, s, inertia, Vec3::Zero(), 0.025);
    CHECK(tau.norm() == 0.0);
  }
  SECTION("gyroscopic term vanishes on principal axes") {
    PidGains zero;
    PidState s2;
    for (int axis = 0; axis < 3; ++axis) {
      const Vec3 omega = Vec3::Unit(axis) * 2.0;
      const Vec3 tau = pid_attitude(Vec3::Zero(), Vec3::Zero(), zero, s2, inertia, omega, 0.025);
      CHECK(tau.norm() < 1e-15);
    }
  }
  SECTION("gyroscopic term matches brute-force cross product") {
    PidGains zero;
    PidState s2;
    const Vec3 omega(1, 1, 0);
    const Vec3 tau = pid_attitude(Vec3::Zero(), Vec3::Zero(), zero, s2, inertia, omega, 0.025);
    CHECK(tau.isApprox(omega.cross(Vec3(inertia * omega)), 1e-14));
    CHECK(tau.isApprox(Vec3(0, 0, 0.01), 1e-12));
  }
  SECTION("inertia scales the feedback") {
    PidState s2;
    const Vec3 tau =
        pid_attitude(Vec3(0.1, 0, 0), Vec3::Zero(), g, s2, inertia, Vec3::Zero(), 0.025);
    CHECK(tau.isApprox(Vec3(inertia * Vec3(0.3, 0, 0)), 1e-12));
  }
}

TEST_CASE("under-actuated pipeline") {
  const auto m = balanced_unit();
  const auto frame = static_thrust_frame(m);
  const double mg = m.mass * m.gravity;

  SECTION("level hover") {
    const auto t = underactuated_position_pipeline(Vec3(0, 0, mg), Mat3::Identity(), frame, m.mass);
    CHECK(t.roll == Catch::Approx(0.0).margin(1e-12));
    CHECK(t.pitch == Catch::Approx(0.0).margin(1e-12));
    CHECK((t.lambda_z - static_thrust_vector(frame)).norm() < 1e-9);
  }
  SECTION("lateral force tips the roll target") {
    const auto t =
        underactuated_position_pipeline(Vec3(0, -1, 10), Mat3::Identity(), frame, m.mass);
    CHECK(t.roll == Catch::Approx(std::atan2(1.0, 10.0)).margin(1e-12));
  }
  SECTION("forward force tips the pitch target") {
    const auto t = underactuated_position_pipeline(Vec3(1, 0, 10), Mat3::Identity(), frame, m.mass);
    CHECK(t.pitch == Catch::Approx(std::atan2(1.0, 10.0)).margin(1e-12));
    CHECK(t.roll == Catch::Approx(0.0).margin(1e-12));
  }
  SECTION("collective follows the thrust axis") {
    const Mat3 r = rot_y(0.2);
    const Vec3 f(0, 0, 10);
    const auto t = underactuated_position_pipeline(f, r, frame, m.mass);
    CHECK(t.f_z == Catch::Approx((r * Vec3::UnitZ()).dot(f)).margin(1e-12));
  }
  SECTION("near free fall rejected") {
    CHECK_THROWS_AS(
        underactuated_position_pipeline(Vec3(0, 0, 0.1), Mat3::Identity(), frame, m.mass),
        ThrustTooLow);
  }
}

TEST_CASE("lqi system structure") {
  const auto m = reference_unit();
  const auto frame = static_thrust_frame(m);
  const auto sys = build_lqi_system(m, frame);

  CHECK(sys.A.rows() == 9);
  CHECK(sys.A.cols() == 9);
  CHECK(sys.B.rows() == 9);
  CHECK(sys.B.cols() == 4);
  CHECK(sys.C.isIdentity(0.0));
  CHECK(sys.D.rows() == 9);
  CHECK(sys.D.cols() == 3);

  SECTION("only the rate rows carry inputs") {
    for (int r : {0, 2, 4, 6, 7, 8}) {
      CHECK(sys.B.row(r).cwiseAbs().maxCoeff() == 0.0);
      CHECK(sys.D.row(r).cwiseAbs().maxCoeff() == 0.0);
    }
    for (int r : {1, 3, 5}) CHECK(sys.B.row(r).cwiseAbs().maxCoeff() > 0.0);
  }
  SECTION("integrator chains are nilpotent") {
    MatX p = MatX::Identity(9, 9);
    for (int i = 0; i < 9; ++i) p = p * sys.A;
    CHECK(p.cwiseAbs().maxCoeff() == 0.0);
  }
  SECTION("input rows equal the inverse-inertia torque map") {
    const Mat3 inertia_c = frame.R_C * m.inertia * frame.R_C.transpose();
    const MatX expect = -(inertia_c.inverse() * frame.Q_rot_p);
    CHECK((sys.B.row(1) - expect.row(0)).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((sys.B.row(3) - expect.row(1)).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((sys.B.row(5) - expect.row(2)).cwiseAbs().maxCoeff() < 1e-15);
  }
  SECTION("controllable for the shipped unit") {
    MatX ctrb(9, 9 * 4);
    MatX ab = sys.B;
    for (int i = 0; i < 9; ++i) {
      ctrb.middleCols(4 * i, 4) = ab;
      ab = sys.A * ab;
    }
    Eigen::JacobiSVD<MatX> svd(ctrb);
    CHECK(svd.rank() == 9);
  }
}

TEST_CASE("lqi input weight") {
  const auto m = reference_unit();
  const auto frame = static_thrust_frame(m);

  SECTION("zero force weight leaves the base weight") {
    const MatX n = lqi_weight_N(VecX::Ones(4) * 2.0, Vec3::Zero(), frame.Q_tran_p);
    CHECK(n.isApprox(MatX::Identity(4, 4) * 2.0, 1e-15));
  }
  SECTION("quadratic form equals the squared translational force") {
    const MatX n = lqi_weight_N(VecX::Ones(4), Vec3::Ones(), frame.Q_tran_p);
    Rng rng(12);
    for (int t = 0; t < 10; ++t) {
      VecX lam(4);
      for (int i = 0; i < 4; ++i) lam(i) = rng.uniform(-3, 3);
      const double quad = lam.dot((n - MatX::Identity(4, 4)) * lam);
      const double force = (frame.Q_tran_p * lam).squaredNorm();
      CHECK(quad == Catch::Approx(force).margin(1e-12));
    }
  }
  SECTION("positive-definite with unit base weight") {
    const MatX n = lqi_weight_N(VecX::Ones(4), Vec3::Ones() * 3.0, frame.Q_tran_p);
    Eigen::SelfAdjointEigenSolver<MatX> es(n);
    CHECK(es.eigenvalues().minCoeff() >= 1.0 - 1e-9);
  }
  SECTION("bad weights rejected") {
    CHECK_THROWS_AS(lqi_weight_N(VecX::Zero(4), Vec3::Ones(), frame.Q_tran_p), WeightError);
    CHECK_THROWS_AS(lqi_weight_N(VecX::Ones(4), Vec3(-1, 0, 0), frame.Q_tran_p), WeightError);
    CHECK_THROWS_AS(lqi_weight_N(VecX::Ones(3), Vec3::Ones(), frame.Q_tran_p), WeightError);
  }
}

TEST_CASE("lqi gain synthesis") {
  const auto m = reference_unit();
  const auto frame = static_thrust_frame(m);
  const auto design = build_lqi(m, frame);

  CHECK(design.K.rows() == 4);
  CHECK(design.K.cols() == 9);
  CHECK(design.riccati_residual < 1e-8);

  SECTION("closed loop strictly stable") {
    CHECK(max_real_eig(design.sys.A - design.sys.B * design.K) < -1e-6);
  }
  SECTION("output is linear feedback when the craft is not spinning") {
    Rng rng(4);
    for (int t = 0; t < 5; ++t) {
      VecX x(9);
      for (int i = 0; i < 9; ++i) x(i) = rng.uniform(-1, 1);
      const VecX out = lqi_attitude_output(x, design, Vec3::Zero());
      CHECK((out - design.K * x).norm() < 1e-12);
    }
  }
  SECTION("zero state, zero rate: no output") {
    CHECK(lqi_attitude_output(VecX::Zero(9), design, Vec3::Zero()).norm() == 0.0);
  }
  SECTION("gyroscopic compensation vanishes on principal axes") {
    const Mat3 diag_inertia = Vec3(0.02, 0.03, 0.04).asDiagonal();
    const VecX out =
        lqi_attitude_output(VecX::Zero(9), design.K, frame, Vec3(0, 0, 2), diag_inertia);
    CHECK(out.norm() < 1e-15);
  }
  SECTION("untiltable craft cannot be stabilized") {
    const auto flat = make_flat_quad();
    const auto flat_frame = static_thrust_frame(flat);
    CHECK_THROWS_AS(build_lqi(flat, flat_frame), RiccatiError);
  }
}

TEST_CASE("transition weight") {
  CHECK(transition_weight(0.0) == 0.0);
  CHECK(transition_weight(120.0, 0.9) == Catch::Approx(0.990825).margin(1e-6));
  CHECK(transition_weight(1e9) == Catch::Approx(1.0).margin(1e-6));
  double prev = -1;
  for (double t = 0; t < 300; t += 1) {
    const double w = transition_weight(t);
    CHECK(w > prev);
    CHECK(w < 1.0);
    prev = w;
  }
  CHECK_THROWS_AS(transition_weight(-1.0), std::invalid_argument);
  CHECK_THROWS_AS(transition_weight(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("switch capture") {
  SECTION("captures the pre-switch total") {
    const VecX prev = VecX::Constant(8, 2.695);
    const auto ts = begin_switch(prev);
    CHECK(ts.S_unit == Catch::Approx(21.56).margin(1e-12));
    CHECK(ts.active);
    CHECK(ts.t == 0.0);
  }
  SECTION("rejects a dead craft") {
    CHECK_THROWS_AS(begin_switch(VecX::Zero(8)), SwitchError);
    VecX nan_thrusts = VecX::Constant(4, std::nan(""));
    CHECK_THROWS_AS(begin_switch(nan_thrusts), SwitchError);
  }
}

TEST_CASE("transition blend") {
  const VecX demand = (VecX(4) << 3.0, 2.5, 3.5, 3.0).finished();  // total 12
  const double s_assem = demand.cwiseAbs().sum();

  SECTION("starts at the captured total exactly") {
    auto ts = begin_switch(VecX::Constant(4, 2.0));  // S_unit = 8
    const VecX out = transition_scale(demand, ts);
    CHECK(out.cwiseAbs().sum() == Catch::Approx(8.0).margin(1e-12));
  }
  SECTION("identity when totals already match") {
    auto ts = begin_switch(demand);
    for (int i = 0; i < 50; ++i) {
      const VecX out = transition_scale(demand, ts);
      CHECK((out - demand).norm() < 1e-12);
    }
  }
  SECTION("direction preserved, bound respected, converges") {
    auto ts = begin_switch(VecX::Constant(4, 2.0));
    VecX out;
    for (int k = 0; k < 121; ++k) {
      const double w = transition_weight(ts.t);
      out = transition_scale(demand, ts);
      // per-rotor ratios identical: positive scalar multiple
      const double ratio = out(0) / demand(0);
      for (int i = 1; i < 4; ++i) CHECK(out(i) / demand(i) == Catch::Approx(ratio).margin(1e-12));
      CHECK(ratio > 0.0);
      const double rel = (out - demand).norm() / demand.norm();
      CHECK(rel <= (1.0 - w) * std::abs(ts.S_unit - s_assem) / s_assem + 1e-12);
    }
    CHECK((out - demand).norm() / demand.norm() < 0.01);  // within 1% after 120 ticks
  }
  SECTION("terminates and passes through") {
    auto ts = begin_switch(VecX::Constant(4, 2.0));
    for (int k = 0; k < 230; ++k) transition_scale(demand, ts);
    CHECK_FALSE(ts.active);
    const VecX out = transition_scale(demand, ts);
    CHECK((out - demand).norm() == 0.0);
  }
  SECTION("zero demand holds the last output") {
    auto ts = begin_switch(VecX::Constant(4, 2.0));
    const VecX first = transition_scale(demand, ts);
    const VecX held = transition_scale(VecX::Zero(4), ts);
    CHECK(ts.held);
    CHECK((held - first).norm() == 0.0);
    const VecX resumed = transition_scale(demand, ts);
    CHECK_FALSE(ts.held);
    CHECK(resumed.allFinite());
  }
}

TEST_CASE("docking conditions") {
  Tolerances tol;

  SECTION("defaults validate") { CHECK_NOTHROW(tol.validate()); }
  SECTION("capture bounds must be tighter") {
    Tolerances bad = tol;
    bad.e2_y = 0.05;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  }
  SECTION("standby target") {
    const auto t = standby_targets(tol);
    CHECK(t.position.isApprox(Vec3(0.6, 0, 0), 1e-15));
    CHECK(t.yaw == -kPi);
  }
  SECTION("safety condition") {
    RelativePose rel;
    rel.r = Vec3(0.6, 0.005, 0.005);
    rel.psi = -kPi + 0.05;
    CHECK(condition_check(rel, tol, ConditionId::Safe));
    rel.psi = -kPi + 0.2;
    CHECK_FALSE(condition_check(rel, tol, ConditionId::Safe));
    rel.psi = kPi - 0.05;  // wrapping: +pi side of the seam
    CHECK(condition_check(rel, tol, ConditionId::Safe));
  }
  SECTION("x is unconstrained for safety but pinned for capture") {
    RelativePose rel;
    rel.r = Vec3(5.0, 0.0, 0.0);
    rel.psi = -kPi;
    CHECK(condition_check(rel, tol, ConditionId::Safe));
    CHECK_FALSE(condition_check(rel, tol, ConditionId::Capture));
    rel.r.x() = tol.x_dock + 0.004;
    CHECK(condition_check(rel, tol, ConditionId::Capture));
    rel.r.x() = tol.x_dock + 0.006;
    CHECK_FALSE(condition_check(rel, tol, ConditionId::Capture));
  }
  SECTION("boundary inclusive") {
    RelativePose rel;
    rel.r = Vec3(0.6, tol.e1_y, 0.0);
    rel.psi = -kPi;
    CHECK(condition_check(rel, tol, ConditionId::Safe));
  }
  SECTION("capture yaw bound is tight") {
    RelativePose rel;
    rel.r = Vec3(0.6, 0, 0);
    rel.psi = -kPi + 0.02;
    CHECK(condition_check(rel, tol, ConditionId::Safe));
    CHECK_FALSE(condition_check(rel, tol, ConditionId::Capture));
  }
}

TEST_CASE("docking state machine") {
  const Tolerances tol;
  RelativePose good1;  // satisfies #1 only
  good1.r = Vec3(0.5, 0.01, 0.0);
  good1.psi = -kPi + 0.05;
  RelativePose good2;  // satisfies #2
  good2.r = Vec3(tol.x_dock + 0.002, 0.002, 0.002);
  good2.psi = -kPi + 0.005;
  RelativePose bad;  // violates #1
  bad.r = Vec3(0.5, 0.1, 0.0);
  bad.psi = -kPi;

  SECTION("full assembly chain") {
    DockingFsm fsm(tol);
    FsmInputs in;
    in.rel = bad;
    fsm.step(in);
    CHECK(fsm.state() == FsmStateId::Standby);

    in.rel = good1;
    fsm.step(in);
    CHECK(fsm.state() == FsmStateId::Approach);

    auto cmd = fsm.step(in);
    CHECK(fsm.state() == FsmStateId::Approach);
    // default geometry docks at the standby distance: setpoint stays pinned
    CHECK(cmd.male_target.x() == Catch::Approx(tol.x_dock));

    in.rel = good2;
    fsm.step(in);
    CHECK(fsm.state() == FsmStateId::Assembly);
    cmd = fsm.step(in);
    CHECK(cmd.actuate_dock);

    in.joint_locked = true;
    cmd = fsm.step(in);
    CHECK(fsm.state() == FsmStateId::Transition);
    CHECK(cmd.begin_switch_assembled);

    in.transition_done = true;
    fsm.step(in);
    CHECK(fsm.state() == FsmStateId::Hovering);

    in.disassembly_request = true;
    cmd = fsm.step(in);
    CHECK(fsm.state() == FsmStateId::Transition);
    CHECK(cmd.begin_switch_unit);

    fsm.step(in);
    CHECK(fsm.state() == FsmStateId::Disassembly);

    in.joint_locked = false;
    in.rel.r = Vec3(0.58, 0, 0);
    cmd = fsm.step(in);
    CHECK(cmd.actuate_release);
    CHECK(fsm.state() == FsmStateId::Standby);
  }

  SECTION("approach interruption recovers within one tick") {
    DockingFsm fsm(tol);
    FsmInputs in;
    in.rel = good1;
    fsm.step(in);
    REQUIRE(fsm.state() == FsmStateId::Approach);
    in.rel = bad;
    fsm.step(in);
    CHECK(fsm.state() == FsmStateId::Standby);
  }

  SECTION("assembly aborts when capture is lost") {
    DockingFsm fsm(tol);
    FsmInputs in;
    in.rel = good1;
    fsm.step(in);
    in.rel = good2;
    fsm.step(in);
    REQUIRE(fsm.state() == FsmStateId::Assembly);
    in.rel = good1;
    const auto cmd = fsm.step(in);
    CHECK(fsm.state() == FsmStateId::Approach);
    CHECK_FALSE(cmd.actuate_dock);  // join never commanded outside #2
  }

  SECTION("dock actuation timeout reverts to approach") {
    DockingFsm fsm(tol);
    FsmInputs in;
    in.rel = good1;
    fsm.step(in);
    in.rel = good2;
    fsm.step(in);
    REQUIRE(fsm.state() == FsmStateId::Assembly);
    int steps = 0;
    while (fsm.state() == FsmStateId::Assembly && steps++ < 100) fsm.step(in);
    CHECK(fsm.state() == FsmStateId::Approach);
    CHECK(steps >= 49);  // the full five-second grace period elapsed
    bool saw_timeout = false;
    for (const auto& ev : fsm.events()) saw_timeout |= ev.note.find("timeout") != std::string::npos;
    CHECK(saw_timeout);
  }

  SECTION("approach setpoint ramps inward when docking closer than standby") {
    Tolerances close = tol;
    close.x_dock = 0.36;
    DockingFsm fsm(close);
    FsmInputs in;
    in.rel = good1;  // male observed at x = 0.5
    fsm.step(in);
    REQUIRE(fsm.state() == FsmStateId::Approach);
    double prev = 0.5;
    for (int i = 0; i < 10; ++i) {
      const auto cmd = fsm.step(in);
      CHECK(cmd.male_target.x() == Catch::Approx(prev - 0.01).margin(1e-12));
      prev = cmd.male_target.x();
    }
    for (int i = 0; i < 200; ++i) fsm.step(in);
    const auto cmd = fsm.step(in);
    CHECK(cmd.male_target.x() == Catch::Approx(close.x_dock).margin(1e-12));  // floor
  }

  SECTION("disassembly is unconditional from hovering") {
    DockingFsm fsm(tol);
    FsmInputs in;
    in.rel = good1;
    fsm.step(in);
    in.rel = good2;
    fsm.step(in);
    in.joint_locked = true;
    fsm.step(in);
    in.transition_done = true;
    fsm.step(in);
    REQUIRE(fsm.state() == FsmStateId::Hovering);
    in.rel = bad;  // pose is irrelevant for the disassembly request
    in.disassembly_request = true;
    fsm.step(in);
    CHECK(fsm.state() == FsmStateId::Transition);
    fsm.step(in);
    CHECK(fsm.state() == FsmStateId::Disassembly);
  }
}
