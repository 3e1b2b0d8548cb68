// tiltdock command-line workbench.
//
// Subcommands:
//   optimize     rotor-geometry search -> result JSON + optimized airframe file
//   feasibility  guaranteed wrench margins of an airframe (unit + docked pair)
//   simulate     run one scenario -> telemetry CSV, summary JSON, events JSONL
//   sweep        run a scenario across a seed range -> aggregate CSV + JSON
//   plot         render SVG time-series from an existing telemetry CSV
//
// Exit codes: 0 ok, 2 configuration error, 3 numerical failure,
//             4 threshold failure under --check.
// Set TILTDOCK_LOG=quiet to suppress the effective-config echo, or
// TILTDOCK_LOG=verbose to also print full result summaries to stdout.

#include <CLI11.hpp>

#include <tiltdock/feasibility.hpp>
#include <tiltdock/io.hpp>
#include <tiltdock/opt_io.hpp>
#include <tiltdock/optimizer.hpp>
#include <tiltdock/scenario.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace {

using tiltdock::ConfigError;
using tiltdock::Json;

// Raised when --check thresholds are not met; mapped to exit code 4.
class CheckFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class LogLevel { kQuiet, kNormal, kVerbose };

LogLevel log_level() {
  const char* env = std::getenv("TILTDOCK_LOG");
  if (env == nullptr) return LogLevel::kNormal;
  const std::string v(env);
  if (v == "quiet") return LogLevel::kQuiet;
  if (v == "verbose") return LogLevel::kVerbose;
  return LogLevel::kNormal;
}

void echo(LogLevel lvl, const std::string& text) {
  if (lvl != LogLevel::kQuiet) std::cout << text;
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::replace(s.begin(), s.end(), '\r', ' ');
  return s;
}

// ---------------------------------------------------------------------------
// Overrides: repeated --set dotted.key=value flags.

struct Override {
  std::string key;
  Json value;
};

Json parse_override_value(const std::string& text) {
  const Json parsed = Json::parse(text, nullptr, false);
  if (!parsed.is_discarded()) return parsed;
  return Json(text);  // unquoted strings pass through verbatim
}

std::vector<Override> collect_overrides(const std::vector<std::string>& sets) {
  std::vector<Override> out;
  std::map<std::string, std::string> seen;
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError("override '" + s + "' is not of the form key=value");
    }
    const std::string key = s.substr(0, eq);
    const std::string val = s.substr(eq + 1);
    const auto it = seen.find(key);
    if (it != seen.end() && it->second != val) {
      throw ConfigError("conflicting overrides for '" + key + "': '" + it->second +
                        "' vs '" + val + "'");
    }
    if (it == seen.end()) {
      seen.emplace(key, val);
      out.push_back({key, parse_override_value(val)});
    }
  }
  return out;
}

// Applies one dotted-key override to `target`. `reference` is a fully
// populated default config used to reject unknown keys by their full path.
void apply_override(Json& target, const Json& reference, const Override& ov) {
  std::vector<std::string> parts;
  std::string cur;
  for (const char c : ov.key) {
    if (c == '.') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);

  const Json* ref = &reference;
  Json* tgt = &target;
  std::string path;
  for (size_t i = 0; i < parts.size(); ++i) {
    const std::string& p = parts[i];
    path = path.empty() ? p : path + "." + p;
    if (p.empty()) throw ConfigError("override key '" + ov.key + "' has an empty segment");
    if (!ref->is_object() || !ref->contains(p)) {
      throw ConfigError("unknown key '" + ov.key + "' (no such entry '" + path + "')");
    }
    ref = &(*ref)[p];
    if (i + 1 == parts.size()) {
      (*tgt)[p] = ov.value;
    } else {
      if (!tgt->contains(p) || !(*tgt)[p].is_object()) (*tgt)[p] = Json::object();
      tgt = &(*tgt)[p];
    }
  }
}

void apply_overrides(Json& target, const Json& reference, const std::vector<Override>& ovs) {
  for (const auto& ov : ovs) apply_override(target, reference, ov);
}

// ---------------------------------------------------------------------------
// Artifact plumbing.

std::filesystem::path prepare_out_dir(const std::string& out) {
  std::filesystem::path dir = out.empty() ? std::filesystem::path(".") : std::filesystem::path(out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir;
}

void write_artifact(const std::filesystem::path& path, const std::string& content) {
  try {
    tiltdock::write_text_file(path.string(), content);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("cannot write artifact: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Shared CLI options.

struct CommonOpts {
  std::string config;
  std::string out = ".";
  std::vector<std::string> sets;
  bool check = false;
};

void add_common(CLI::App* cmd, CommonOpts* o, bool with_config = true) {
  if (with_config) {
    cmd->add_option("--config", o->config, "configuration file (.json or .toml)");
  }
  cmd->add_option("--out", o->out, "output directory for artifacts (default: .)");
  cmd->add_option("--set", o->sets, "override a config entry: dotted.key=value (repeatable)");
  cmd->add_flag("--check", o->check, "exit 4 unless result thresholds are met");
}

// ---------------------------------------------------------------------------
// Subcommand: optimize

int run_optimize_cmd(const CommonOpts& opts, std::uint64_t seed, bool seed_given) {
  const LogLevel lvl = log_level();
  Json cfg = opt_problem_to_json(tiltdock::OptProblem{});
  Json base = opts.config.empty() ? cfg : tiltdock::load_config_file(opts.config);
  apply_overrides(base, cfg, collect_overrides(opts.sets));
  tiltdock::OptProblem prob = tiltdock::opt_problem_from_json(base);
  if (seed_given) prob.seed = seed;

  echo(lvl, tiltdock::dump_json(opt_problem_to_json(prob)));

  const tiltdock::OptResult result = tiltdock::optimize(prob);
  const auto dir = prepare_out_dir(opts.out);
  write_artifact(dir / "optimize_result.json", tiltdock::dump_json(opt_result_to_json(result)));

  tiltdock::UnitConfig airframe;
  airframe.params = prob.params;
  airframe.design = result.design;
  airframe.counter_torque = prob.counter_torque;
  airframe.name = "optimized";
  write_artifact(dir / "airframe_optimized.json",
                 tiltdock::dump_json(tiltdock::unit_config_to_json(airframe)));

  echo(lvl, "optimize: feasible=" + std::string(result.feasible ? "true" : "false") +
                " S=" + tiltdock::format_number(result.S) +
                " f_assembled=" + tiltdock::format_number(result.f_min_assembled) +
                " tau_assembled=" + tiltdock::format_number(result.tau_min_assembled) + " -> " +
                dir.string() + "\n");

  if (opts.check) {
    if (!result.feasible) throw CheckFailure("optimizer found no feasible design");
    if (result.f_min_assembled < 6.75 || result.tau_min_assembled < 2.52) {
      throw CheckFailure("optimized margins below thresholds (need f>=6.75, tau>=2.52; got f=" +
                         tiltdock::format_number(result.f_min_assembled) +
                         ", tau=" + tiltdock::format_number(result.tau_min_assembled) + ")");
    }
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Subcommand: feasibility

int run_feasibility_cmd(const CommonOpts& opts, double separation) {
  const LogLevel lvl = log_level();
  const Json defaults = tiltdock::unit_config_to_json(tiltdock::UnitConfig{});
  Json base = opts.config.empty() ? defaults : tiltdock::load_config_file(opts.config);
  apply_overrides(base, defaults, collect_overrides(opts.sets));
  const tiltdock::UnitConfig cfg = tiltdock::unit_config_from_json(base, "airframe");

  echo(lvl, tiltdock::dump_json(tiltdock::unit_config_to_json(cfg)));

  const tiltdock::AirframeModel unit = cfg.build();
  const tiltdock::AirframeModel pair = tiltdock::make_assembled(unit, separation);
  const tiltdock::FeasibilityReport ur = tiltdock::feasibility_report(unit);
  const tiltdock::FeasibilityReport pr = tiltdock::feasibility_report(pair);
  const double yaw_unit = tiltdock::torque_support_along(unit, tiltdock::Vec3::UnitZ());
  const double yaw_pair = tiltdock::torque_support_along(pair, tiltdock::Vec3::UnitZ());

  auto block = [](const tiltdock::FeasibilityReport& r) {
    Json j;
    j["f_min"] = r.f_min;
    j["tau_min"] = r.tau_min;
    j["faces_inspected"] = r.faces_inspected;
    j["degenerate_torque_axis"] = r.degenerate_torque_axis;
    return j;
  };
  Json out;
  out["schema_version"] = tiltdock::kSchemaVersion;
  out["airframe"] = cfg.name;
  out["separation"] = separation;
  out["unit"] = block(ur);
  out["assembled"] = block(pr);
  out["yaw_torque_support"] = {
      {"unit", yaw_unit}, {"assembled", yaw_pair}, {"ratio", yaw_unit > 0 ? yaw_pair / yaw_unit : 0.0}};

  const auto dir = prepare_out_dir(opts.out);
  write_artifact(dir / "feasibility.json", tiltdock::dump_json(out));

  echo(lvl, "feasibility: unit f_min=" + tiltdock::format_number(ur.f_min) +
                " tau_min=" + tiltdock::format_number(ur.tau_min) +
                "; assembled f_min=" + tiltdock::format_number(pr.f_min) +
                " tau_min=" + tiltdock::format_number(pr.tau_min) + " -> " + dir.string() + "\n");
  if (lvl == LogLevel::kVerbose) echo(lvl, tiltdock::dump_json(out));

  if (opts.check) {
    if (ur.f_min <= 0 || ur.tau_min <= 0 || pr.f_min <= 0 || pr.tau_min <= 0) {
      throw CheckFailure("airframe has no guaranteed wrench margin (a minimum is <= 0)");
    }
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Subcommands: simulate / sweep

Json scenario_base_json(const std::string& config, const std::string& scenario_flag) {
  if (!config.empty() && !scenario_flag.empty()) {
    throw ConfigError("give either --config or --scenario, not both");
  }
  if (!config.empty()) return tiltdock::load_config_file(config);
  if (!scenario_flag.empty()) {
    return scenario_to_json(tiltdock::default_scenario(scenario_flag));
  }
  throw ConfigError("simulate/sweep needs --config FILE or --scenario NAME");
}

tiltdock::ScenarioSpec scenario_from_cli(const CommonOpts& opts, const std::string& scenario_flag,
                                         std::uint64_t seed, bool seed_given) {
  // Any default scenario carries the complete key set; use it as the
  // reference for override path validation.
  const Json reference = scenario_to_json(tiltdock::default_scenario("circle_unit"));
  Json base = scenario_base_json(opts.config, scenario_flag);
  apply_overrides(base, reference, collect_overrides(opts.sets));
  tiltdock::ScenarioSpec spec = tiltdock::scenario_from_json(base);
  if (seed_given) spec.seed = seed;
  spec.validate();
  return spec;
}

std::string artifact_stem(const tiltdock::ScenarioSpec& spec) {
  return spec.scenario + "_seed" + std::to_string(spec.seed);
}

int run_simulate_cmd(const CommonOpts& opts, const std::string& scenario_flag, std::uint64_t seed,
                     bool seed_given, bool svg) {
  const LogLevel lvl = log_level();
  const tiltdock::ScenarioSpec spec = scenario_from_cli(opts, scenario_flag, seed, seed_given);
  echo(lvl, tiltdock::dump_json(scenario_to_json(spec)));

  const tiltdock::ScenarioResult result = tiltdock::run_scenario(spec);

  const auto dir = prepare_out_dir(opts.out);
  const std::string stem = artifact_stem(spec);
  write_artifact(dir / (stem + ".csv"), result.telemetry.to_csv());
  write_artifact(dir / (stem + "_summary.json"), tiltdock::dump_json(result.summary));
  if (!result.events_jsonl.empty()) {
    write_artifact(dir / (stem + "_events.jsonl"), result.events_jsonl);
  }
  if (svg) {
    for (const auto& [name, image] : tiltdock::plot_table(result.telemetry, stem)) {
      write_artifact(dir / name, image);
    }
  }

  echo(lvl, "simulate: " + spec.scenario + " seed=" + std::to_string(spec.seed) +
                " success=" + (result.success ? "true" : "false") + " -> " + dir.string() + "\n");
  if (lvl == LogLevel::kVerbose) echo(lvl, tiltdock::dump_json(result.summary));

  if (result.diverged) {
    const std::string cause = result.summary.value("failure_cause", std::string("state non-finite"));
    throw tiltdock::SimDiverged(spec.scenario + ": " + cause);
  }

  if (opts.check && !result.success) {
    std::string cause = "scenario thresholds not met";
    if (result.summary.contains("failure_cause") && result.summary["failure_cause"].is_string()) {
      const std::string c = result.summary["failure_cause"].get<std::string>();
      if (!c.empty()) cause = c;
    }
    throw CheckFailure(spec.scenario + ": " + cause);
  }
  return 0;
}

int run_sweep_cmd(const CommonOpts& opts, const std::string& scenario_flag, std::uint64_t seed,
                  bool seed_given, int seeds, double min_rate) {
  const LogLevel lvl = log_level();
  if (seeds < 1) throw ConfigError("--seeds must be >= 1");
  tiltdock::ScenarioSpec base = scenario_from_cli(opts, scenario_flag, seed, seed_given);
  echo(lvl, tiltdock::dump_json(scenario_to_json(base)));

  // Union of metric keys in first-seen order defines the aggregate columns.
  std::vector<std::string> metric_keys;
  std::vector<Json> runs;
  int successes = 0;
  for (int i = 0; i < seeds; ++i) {
    tiltdock::ScenarioSpec spec = base;
    spec.seed = base.seed + static_cast<std::uint64_t>(i);
    Json row;
    row["seed"] = spec.seed;
    try {
      const tiltdock::ScenarioResult r = tiltdock::run_scenario(spec);
      row["success"] = r.success;
      row["failure_cause"] = r.summary.value("failure_cause", std::string());
      row["metrics"] = r.summary.contains("metrics") ? r.summary["metrics"] : Json::object();
      if (r.success) ++successes;
    } catch (const tiltdock::SimDiverged& e) {
      row["success"] = false;
      row["failure_cause"] = std::string("diverged: ") + e.what();
      row["metrics"] = Json::object();
    }
    for (const auto& [k, v] : row["metrics"].items()) {
      (void)v;
      if (std::find(metric_keys.begin(), metric_keys.end(), k) == metric_keys.end()) {
        metric_keys.push_back(k);
      }
    }
    runs.push_back(std::move(row));
    echo(lvl, "sweep: seed " + std::to_string(spec.seed) + " " +
                  (runs.back()["success"].get<bool>() ? "ok" : "fail") + "\n");
  }

  tiltdock::Table table;
  table.header = {"seed", "success", "failure_cause"};
  for (const auto& k : metric_keys) table.header.push_back(k);
  std::map<std::string, std::pair<double, int>> accum;  // key -> (sum, count)
  for (const auto& row : runs) {
    std::vector<std::string> cells;
    cells.push_back(std::to_string(row["seed"].get<std::uint64_t>()));
    cells.push_back(row["success"].get<bool>() ? "1" : "0");
    cells.push_back(row["failure_cause"].get<std::string>());
    for (const auto& k : metric_keys) {
      const auto& m = row["metrics"];
      if (m.contains(k) && m[k].is_number()) {
        const double v = m[k].get<double>();
        cells.push_back(tiltdock::format_number(v));
        auto& a = accum[k];
        a.first += v;
        a.second += 1;
      } else {
        cells.push_back("");
      }
    }
    table.row(cells);
  }

  const double rate = static_cast<double>(successes) / static_cast<double>(seeds);
  Json summary;
  summary["schema_version"] = tiltdock::kSchemaVersion;
  summary["scenario"] = base.scenario;
  summary["seed_base"] = base.seed;
  summary["runs"] = seeds;
  summary["successes"] = successes;
  summary["success_rate"] = rate;
  Json means = Json::object();
  for (const auto& k : metric_keys) {
    const auto it = accum.find(k);
    if (it != accum.end() && it->second.second > 0) {
      means[k] = it->second.first / it->second.second;
    }
  }
  summary["metrics_mean"] = means;

  const auto dir = prepare_out_dir(opts.out);
  const std::string stem = base.scenario + "_sweep";
  write_artifact(dir / (stem + ".csv"), table.to_csv());
  write_artifact(dir / (stem + "_summary.json"), tiltdock::dump_json(summary));

  echo(lvl, "sweep: " + base.scenario + " " + std::to_string(successes) + "/" +
                std::to_string(seeds) + " ok (rate " + tiltdock::format_number(rate) + ") -> " +
                dir.string() + "\n");
  if (lvl == LogLevel::kVerbose) echo(lvl, tiltdock::dump_json(summary));

  if (opts.check && rate < min_rate) {
    throw CheckFailure("success rate " + tiltdock::format_number(rate) + " below --min-rate " +
                       tiltdock::format_number(min_rate));
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Subcommand: plot

int run_plot_cmd(const std::string& input, const std::string& out) {
  const LogLevel lvl = log_level();
  const std::string text = tiltdock::read_text_file(input);
  const auto rows = tiltdock::parse_csv(text);
  if (rows.empty()) throw ConfigError("CSV '" + input + "' has no header row");
  tiltdock::Table table;
  table.header = rows.front();
  table.rows.assign(rows.begin() + 1, rows.end());

  const std::string stem = std::filesystem::path(input).stem().string();
  const auto plots = tiltdock::plot_table(table, stem);
  if (plots.empty()) throw ConfigError("CSV '" + input + "' has no plottable numeric columns");

  const auto dir = prepare_out_dir(out);
  for (const auto& [name, image] : plots) {
    write_artifact(dir / name, image);
    echo(lvl, "plot: " + (dir / name).string() + "\n");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tiltdock: tilted-rotor docking workbench"};
  app.require_subcommand(1);

  CommonOpts opt_opts, feas_opts, sim_opts, sweep_opts;
  std::uint64_t seed = 0;
  double separation = tiltdock::kDockedSeparation;
  std::string scenario_flag, sweep_scenario_flag, plot_input;
  std::string plot_out = ".";
  bool svg = false;
  int sweep_seeds = 10;
  double min_rate = 0.86;

  CLI::App* optimize = app.add_subcommand("optimize", "search rotor tilt/azimuth angles");
  add_common(optimize, &opt_opts);
  CLI::Option* opt_seed = optimize->add_option("--seed", seed, "search seed");

  CLI::App* feasibility = app.add_subcommand("feasibility", "guaranteed wrench margins");
  add_common(feasibility, &feas_opts);
  feasibility->add_option("--separation", separation, "docked CoG separation in m (default 0.6)");

  CLI::App* simulate = app.add_subcommand("simulate", "run one scenario");
  add_common(simulate, &sim_opts);
  simulate->add_option("--scenario", scenario_flag,
                       "built-in scenario name (alternative to --config)");
  CLI::Option* sim_seed = simulate->add_option("--seed", seed, "scenario seed");
  simulate->add_flag("--svg", svg, "also write SVG plots of the telemetry");

  CLI::App* sweep = app.add_subcommand("sweep", "run a scenario across consecutive seeds");
  add_common(sweep, &sweep_opts);
  sweep->add_option("--scenario", sweep_scenario_flag,
                    "built-in scenario name (alternative to --config)");
  CLI::Option* sweep_seed = sweep->add_option("--seed", seed, "base seed (default: config seed)");
  sweep->add_option("--seeds", sweep_seeds, "number of consecutive seeds to run (default 10)");
  sweep->add_option("--min-rate", min_rate,
                    "success-rate threshold for --check (default 0.86)");

  CLI::App* plot = app.add_subcommand("plot", "render SVGs from a telemetry CSV");
  plot->add_option("--input", plot_input, "telemetry CSV file")->required();
  plot->add_option("--out", plot_out, "output directory for SVGs (default: .)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: config: " << one_line(e.what()) << "\n";
    return 2;
  }

  try {
    if (optimize->parsed()) {
      return run_optimize_cmd(opt_opts, seed, opt_seed->count() > 0);
    }
    if (feasibility->parsed()) {
      return run_feasibility_cmd(feas_opts, separation);
    }
    if (simulate->parsed()) {
      return run_simulate_cmd(sim_opts, scenario_flag, seed, sim_seed->count() > 0, svg);
    }
    if (sweep->parsed()) {
      return run_sweep_cmd(sweep_opts, sweep_scenario_flag, seed, sweep_seed->count() > 0,
                           sweep_seeds, min_rate);
    }
    if (plot->parsed()) {
      return run_plot_cmd(plot_input, plot_out);
    }
    std::cerr << "error: config: no subcommand\n";
    return 2;
  } catch (const CheckFailure& e) {
    std::cerr << "error: check: " << one_line(e.what()) << "\n";
    return 4;
  } catch (const ConfigError& e) {
    std::cerr << "error: config: " << one_line(e.what()) << "\n";
    return 2;
  } catch (const Json::exception& e) {
    std::cerr << "error: config: " << one_line(e.what()) << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: config: " << one_line(e.what()) << "\n";
    return 2;
  } catch (const tiltdock::SimDiverged& e) {
    std::cerr << "error: numerical: " << one_line(e.what()) << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: numerical: " << one_line(e.what()) << "\n";
    return 3;
  }
}
