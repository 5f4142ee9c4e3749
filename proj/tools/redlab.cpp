#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "redlab/common.hpp"
#include "redlab/experiments.hpp"
#include "redlab/fluid.hpp"
#include "redlab/json_io.hpp"
#include "redlab/simulator.hpp"
#include "redlab/stability.hpp"

namespace {

using redlab::ConfigError;

void write_output(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw redlab::RuntimeError("cannot write to " + out_path);
  out << text;
}

redlab::ConfigFile load_with_topology(const std::string& path) {
  redlab::ConfigFile cfg = redlab::load_config_file(path);
  if (!cfg.has_topology) throw ConfigError("config: missing \"topology\"");
  return cfg;
}

struct Overrides {
  std::optional<double> lambda;
  std::optional<std::uint64_t> seed;
  std::optional<long> busy_periods;
};

redlab::SimConfig build_sim_config(redlab::ConfigFile& cfg, const Overrides& ov) {
  if (cfg.sim.is_null()) throw ConfigError("config: missing \"sim\" block");
  if (ov.lambda) cfg.topology.lambda = *ov.lambda;
  redlab::SimConfig sim = redlab::sim_config_from_json(cfg.sim, cfg.topology);
  if (ov.seed) sim.seed = *ov.seed;
  if (ov.busy_periods) sim.busy_periods = *ov.busy_periods;
  return sim;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stability analysis and simulation of redundancy dispatch systems"};
  app.require_subcommand(1);

  std::string config_path, out_path;
  Overrides ov;
  double horizon = 0.0;
  int table_id = 0;

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    if (needs_config) cmd->add_option("config", config_path, "JSON config file")->required();
    cmd->add_option("--out", out_path, "output path (default: stdout)");
    cmd->add_option("--lambda", ov.lambda, "override the arrival rate");
    cmd->add_option("--seed", ov.seed, "override the RNG seed");
    cmd->add_option("--busy-periods", ov.busy_periods, "override the cycle count");
  };

  CLI::App* c_stability = app.add_subcommand("stability", "print the stability report as JSON");
  add_common(c_stability, true);

  CLI::App* c_simulate = app.add_subcommand("simulate", "run the simulator, print result JSON");
  add_common(c_simulate, true);

  CLI::App* c_traj = app.add_subcommand("trajectory", "write per-server copy counts over time");
  add_common(c_traj, true);
  c_traj->add_option("--horizon", horizon, "time horizon")->required();

  CLI::App* c_fluid = app.add_subcommand("fluid", "write the fluid drain schedule as CSV");
  add_common(c_fluid, true);
  c_fluid->add_option("--horizon", horizon, "horizon cap for non-draining cases");

  CLI::App* c_table = app.add_subcommand("table", "write a frontier table as CSV");
  c_table->add_option("id", table_id, "table id (2, 3 or 4)")->required();
  c_table->add_option("--out", out_path, "output path (default: stdout)");

  CLI::App* c_sweep = app.add_subcommand("sweep", "run a parameter sweep, write CSV");
  add_common(c_sweep, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (c_stability->parsed()) {
      redlab::ConfigFile cfg = load_with_topology(config_path);
      if (ov.lambda) cfg.topology.lambda = *ov.lambda;
      redlab::StabilityReport rep = redlab::analyze(cfg.topology);
      write_output(redlab::stability_report_to_json(rep).dump(2) + "\n", out_path);
    } else if (c_simulate->parsed()) {
      redlab::ConfigFile cfg = load_with_topology(config_path);
      redlab::SimConfig sim = build_sim_config(cfg, ov);
      redlab::SimResult res = redlab::run(sim);
      write_output(redlab::sim_result_to_json(res).dump(2) + "\n", out_path);
    } else if (c_traj->parsed()) {
      redlab::ConfigFile cfg = load_with_topology(config_path);
      redlab::SimConfig sim = build_sim_config(cfg, ov);
      redlab::SimResult res = redlab::run_trajectory(sim, horizon);
      write_output(redlab::trajectory_csv(res), out_path);
    } else if (c_fluid->parsed()) {
      redlab::ConfigFile cfg = load_with_topology(config_path);
      if (ov.lambda) cfg.topology.lambda = *ov.lambda;
      redlab::ServiceDistribution service = redlab::ServiceDistribution::exponential();
      std::vector<double> mass(cfg.topology.num_servers(), 0.0);
      if (!cfg.sim.is_null()) {
        redlab::SimConfig sim = redlab::sim_config_from_json(cfg.sim, cfg.topology);
        service = sim.service;
        for (std::size_t c = 0; c < sim.initial_jobs.size(); ++c)
          for (int s : cfg.topology.types[c].servers)
            mass[s] += static_cast<double>(sim.initial_jobs[c]);
      }
      redlab::FluidTrajectory f =
          redlab::ub_drain_schedule(cfg.topology, mass, service, horizon);
      write_output(redlab::fluid_csv(f), out_path);
      std::string events_path = out_path.empty() ? "fluid_events.json" : out_path + ".events.json";
      std::ofstream ev(events_path);
      ev << redlab::fluid_events_json(f) << "\n";
    } else if (c_table->parsed()) {
      write_output(redlab::table_csv(table_id), out_path);
    } else if (c_sweep->parsed()) {
      redlab::ConfigFile cfg = redlab::load_config_file(config_path);
      if (cfg.sweep.is_null()) throw ConfigError("config: missing \"sweep\" block");
      redlab::SweepSpec spec = redlab::sweep_spec_from_json(cfg.sweep);
      if (ov.seed) spec.seed = *ov.seed;
      if (ov.busy_periods) spec.busy_periods = *ov.busy_periods;
      auto rows = redlab::sweep_mean_jobs(spec);
      write_output(redlab::sweep_csv(rows), out_path);
      std::string manifest_path =
          out_path.empty() ? "sweep_manifest.json" : out_path + ".manifest.json";
      std::ofstream mf(manifest_path);
      mf << redlab::sweep_manifest_json(spec) << "\n";
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
