// Randomized cross-validation of the geometric feasibility metrics against
// the direction-sampling oracle, plus allocation round-trip properties on
// randomly drawn rotor geometries.

#include <catch2/catch_amalgamated.hpp>

#include "tiltdock/airframe.hpp"
#include "tiltdock/alloc.hpp"
#include "tiltdock/feasibility.hpp"
#include "tiltdock/optimizer.hpp"
#include "tiltdock/rng.hpp"

#include <Eigen/QR>

using namespace tiltdock;

namespace {

UnitDesign random_design(Rng& rng) {
  UnitDesign d;
  for (int i = 0; i < 4; ++i) {
    d.alpha[i] = rng.uniform(0.05, 0.9);
    d.beta[i] = rng.uniform(-kPi, kPi);
  }
  return d;
}

// Draws designs until both wrench margins clear a small physical floor
// (0.3 N disturbance rejection, 0.03 N m control authority), so the
// relative 2% comparison below is well-conditioned.
AirframeModel random_feasible_unit(Rng& rng) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const AirframeModel m = make_unit(random_design(rng), "random");
    FeasibilityReport rep;
    try {
      const double f = guaranteed_min_force(m, &rep);
      const double tau = guaranteed_min_torque(m, &rep);
      if (f > 0.3 && tau > 0.03 && !rep.degenerate_torque_axis) return m;
    } catch (const DegenerateForcePolytope&) {
    } catch (const DegenerateTorquePolytope&) {
    }
  }
  FAIL("could not draw a feasible random unit");
  return reference_unit();
}

void check_oracle_match(const AirframeModel& m, int samples) {
  const double f = guaranteed_min_force(m);
  const double tau = guaranteed_min_torque(m);
  const double fo = oracle_min_wrench_refined(m, WrenchKind::Force, samples);
  const double to = oracle_min_wrench_refined(m, WrenchKind::Torque, samples);
  // The sampled minimum can only sit on or above the exact face minimum.
  CHECK(fo >= f - 1e-9);
  CHECK(to >= tau - 1e-9);
  CHECK(fo <= f * 1.02);
  CHECK(to <= tau * 1.02);
}

}  // namespace

TEST_CASE("random units: geometric minima match the sampling oracle") {
  Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    const AirframeModel m = random_feasible_unit(rng);
    CAPTURE(i);
    check_oracle_match(m, 40000);
  }
}

TEST_CASE("random assembled pairs: geometric minima match the sampling oracle") {
  Rng rng(23);
  int accepted = 0;
  while (accepted < 100) {
    const AirframeModel unit = random_feasible_unit(rng);
    const AirframeModel pair = make_assembled(unit);
    FeasibilityReport rep;
    double f = 0.0, tau = 0.0;
    try {
      f = guaranteed_min_force(pair, &rep);
      tau = guaranteed_min_torque(pair, &rep);
    } catch (const DegenerateForcePolytope&) {
      continue;
    } catch (const DegenerateTorquePolytope&) {
      continue;
    }
    if (f <= 0.3 || tau <= 0.03 || rep.degenerate_torque_axis) continue;
    CAPTURE(accepted);
    check_oracle_match(pair, 40000);
    ++accepted;
  }
}

TEST_CASE("rank-6 allocation pseudo-inverse round-trips") {
  Rng rng(37);
  int accepted = 0;
  while (accepted < 25) {
    const AirframeModel pair = make_assembled(random_feasible_unit(rng));
    const AllocationMatrices a = build_allocation(pair);
    Eigen::CompleteOrthogonalDecomposition<MatX> cod(a.Q);
    if (cod.rank() < 6) continue;
    const MatX pinv = cod.pseudoInverse();
    for (int k = 0; k < 4; ++k) {
      VecX w(6);
      for (int j = 0; j < 6; ++j) w(j) = rng.uniform(-5.0, 5.0);
      const VecX back = a.Q * (pinv * w);
      CAPTURE(accepted, k);
      CHECK((back - w).norm() < 1e-9);
    }
    ++accepted;
  }
}

TEST_CASE("quad allocation inverse round-trips on random geometries") {
  Rng rng(41);
  int accepted = 0;
  while (accepted < 25) {
    const AirframeModel m = random_feasible_unit(rng);
    TiltedFrame frame;
    QuadAllocation q;
    try {
      frame = static_thrust_frame(m, 1.0);
      q = quad_allocation(frame);
    } catch (const NoStaticHover&) {
      continue;
    } catch (const SingularFrame&) {
      continue;
    } catch (const SingularAllocation&) {
      continue;
    }
    CHECK((q.A * q.A_inv - Eigen::Matrix4d::Identity()).norm() < 1e-9);
    const double f_z = rng.uniform(2.0, 20.0);
    const Vec3 torque(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    const Eigen::Vector4d lambda = allocate_under_actuated(q, f_z, torque);
    const Eigen::Vector4d wrench = q.A * lambda;
    CHECK(wrench(0) == Catch::Approx(f_z).margin(1e-9));
    CHECK((wrench.tail<3>() - torque).norm() < 1e-9);
    ++accepted;
  }
}

TEST_CASE("static thrust on the optimized unit balances gravity exactly") {
  OptProblem prob;
  prob.seed = 5;
  const OptResult r = optimize(prob);
  REQUIRE(r.feasible);

  const AirframeModel m = make_unit(r.design, prob.params, "optimized", prob.counter_torque);
  const TiltedFrame frame = static_thrust_frame(m);
  const AllocationMatrices a = build_allocation(m);
  const VecX lambda = static_thrust_vector(frame);

  CHECK((a.Q_tran * lambda).norm() == Catch::Approx(m.mass * m.gravity).margin(1e-9));
  CHECK((a.Q_rot * lambda).norm() < 1e-6);
  // Hover thrust stays inside the per-rotor ceiling with margin.
  CHECK(frame.lambda_s < m.rotors[0].max_thrust);
}
