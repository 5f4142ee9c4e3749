#pragma once

#include <string>

#include <json.hpp>

#include "redlab/distributions.hpp"
#include "redlab/experiments.hpp"
#include "redlab/fluid.hpp"
#include "redlab/simulator.hpp"
#include "redlab/stability.hpp"
#include "redlab/topology.hpp"

namespace redlab {

using json = nlohmann::json;

// Topology: {"capacities":[...], "types":[{"servers":[0,1],"p":0.25},...], "lambda":7.5}
Topology topology_from_json(const json& j);
json topology_to_json(const Topology& t);

// {"kind":"hyperexp","q":0.2,"mu1":0.4,"mu2":1.6} etc.
ServiceDistribution distribution_from_json(const json& j);
json distribution_to_json(const ServiceDistribution& d);

// {"epsilon":1.0,"slowdowns":[{"s":1,"p":0.23},...]}; "slowdowns":"dolly" expands
// to the 12-point trace distribution.
CapacityModulation modulation_from_json(const json& j);
json modulation_to_json(const CapacityModulation& m);

json stability_report_to_json(const StabilityReport& r);
StabilityReport stability_report_from_json(const json& j);  // round-trip support

SimConfig sim_config_from_json(const json& j, const Topology& top);
json sim_result_to_json(const SimResult& r);

SweepSpec sweep_spec_from_json(const json& j);
std::string sweep_manifest_json(const SweepSpec& spec);

// Top-level CLI config: {"topology": {...}|"path.json", "sim":{...}, "sweep":{...}}.
// Unknown keys anywhere are rejected.
struct ConfigFile {
  Topology topology;
  bool has_topology = false;
  json sim;    // raw blocks, validated on use
  json sweep;
};

ConfigFile load_config_file(const std::string& path);

std::string trajectory_csv(const SimResult& r);
std::string fluid_csv(const FluidTrajectory& f);
std::string fluid_events_json(const FluidTrajectory& f);

}  // namespace redlab
