// Shows why the controller hand-off matters: two freshly docked units switch
// from per-unit control to combined control, once with the blended transition
// and once by swapping controllers abruptly. Model error is injected on one
// unit so the two controllers genuinely disagree at the switch.

#include <tiltdock/scenario.hpp>

#include <iostream>

int main() {
  using namespace tiltdock;

  const ScenarioSpec spec = default_scenario("transition_ablation");
  const ScenarioResult res = run_scenario(spec);

  const Json& m = res.summary["metrics"];
  std::cout << "altitude excursion with transition    " << m["excursion_with_transition"].dump()
            << " m\n";
  std::cout << "altitude excursion without transition " << m["excursion_without_transition"].dump()
            << " m\n";
  std::cout << "excursion ratio                       " << m["excursion_ratio"].dump() << "\n";
  std::cout << "thrust jump at switch (blended)       " << m["thrust_jump_with_transition"].dump()
            << " N\n";
  std::cout << "thrust jump at switch (abrupt)        "
            << m["thrust_jump_without_transition"].dump() << " N\n";
  return res.success ? 0 : 1;
}
