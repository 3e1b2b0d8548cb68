// Regenerates the shipped config files.  Run from anywhere:
//
//   gen_configs <output-dir>
//
// Every file is written through the deterministic serializers, so rerunning
// the tool on an unchanged tree is a no-op byte-for-byte.

#include <cstdio>
#include <filesystem>
#include <string>

#include "tiltdock/io.hpp"
#include "tiltdock/opt_io.hpp"
#include "tiltdock/scenario.hpp"

using namespace tiltdock;

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: gen_configs <output-dir>\n");
    return 2;
  }
  const std::filesystem::path dir(argv[1]);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    std::fprintf(stderr, "error: cannot create %s: %s\n", dir.string().c_str(),
                 ec.message().c_str());
    return 2;
  }

  try {
    UnitConfig unit;  // reference airframe
    write_text_file((dir / "unit.json").string(), dump_json(unit_config_to_json(unit)));

    OptProblem opt;
    write_text_file((dir / "optimize.json").string(), dump_json(opt_problem_to_json(opt)));

    for (const std::string& name : scenario_names()) {
      const Json j = scenario_to_json(default_scenario(name));
      write_text_file((dir / (name + ".json")).string(), dump_json(j));
    }

    // One TOML twin to exercise the second config format end to end.
    const Json circle = scenario_to_json(default_scenario("circle_unit"));
    write_text_file((dir / "circle_unit.toml").string(), emit_toml(circle));
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  std::printf("configs written to %s\n", dir.string().c_str());
  return 0;
}
