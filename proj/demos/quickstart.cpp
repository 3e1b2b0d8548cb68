// Minimal tour of the library: build the reference airframe, inspect its
// guaranteed wrench margins and hover geometry, then fly a short circle.

#include <tiltdock/feasibility.hpp>
#include <tiltdock/io.hpp>
#include <tiltdock/scenario.hpp>

#include <cmath>
#include <iostream>

int main() {
  using namespace tiltdock;

  // The default UnitConfig is the reference four-rotor tilted unit.
  const UnitConfig cfg;
  const AirframeModel unit = cfg.build();
  const AirframeModel pair = make_assembled(unit);

  const FeasibilityReport ur = feasibility_report(unit);
  const FeasibilityReport pr = feasibility_report(pair);
  std::cout << "unit      f_min " << format_number(ur.f_min) << " N, tau_min "
            << format_number(ur.tau_min) << " N m\n";
  std::cout << "assembled f_min " << format_number(pr.f_min) << " N, tau_min "
            << format_number(pr.tau_min) << " N m\n";

  // Static hover: per-rotor thrust that cancels gravity with zero torque,
  // and the body lean that makes that thrust vertical.
  const TiltedFrame frame = static_thrust_frame(unit);
  std::cout << "hover thrust per rotor " << format_number(frame.lambda_s) << " N, body tilt "
            << format_number(std::acos(frame.R_C(2, 2))) << " rad\n";

  // One lap of a small circle with the full closed-loop stack.
  ScenarioSpec spec = default_scenario("circle_unit");
  spec.circle.laps = 1;
  spec.circle.window = 20;
  const ScenarioResult res = run_scenario(spec);
  std::cout << "circle rmse " << res.summary["metrics"]["rmse"].dump() << " m ("
            << (res.success ? "ok" : "failed") << ")\n";
  return res.success ? 0 : 1;
}
