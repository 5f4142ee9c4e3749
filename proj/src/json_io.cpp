#include "redlab/json_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "redlab/common.hpp"

namespace redlab {

double round12(double x) {
  if (!std::isfinite(x)) return x;
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return std::strtod(buf, nullptr);
}

std::string format12(double x) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return buf;
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed,
                    const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key()))
      throw ConfigError(where + ": unknown key \"" + it.key() + "\"");
  }
}

double get_num(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing \"" + key + "\"");
  if (!j[key].is_number()) throw ConfigError(where + ": \"" + key + "\" must be a number");
  return j[key].get<double>();
}

}  // namespace

Topology topology_from_json(const json& j) {
  reject_unknown(j, {"capacities", "types", "lambda"}, "topology");
  Topology t;
  if (!j.contains("capacities") || !j["capacities"].is_array())
    throw ConfigError("topology: \"capacities\" must be an array");
  for (const auto& v : j["capacities"]) t.capacities.push_back(v.get<double>());
  if (!j.contains("types") || !j["types"].is_array())
    throw ConfigError("topology: \"types\" must be an array");
  for (const auto& ty : j["types"]) {
    reject_unknown(ty, {"servers", "p"}, "topology.types");
    JobType jt;
    for (const auto& s : ty["servers"]) jt.servers.push_back(s.get<int>());
    jt.prob = get_num(ty, "p", "topology.types");
    t.types.push_back(std::move(jt));
  }
  t.lambda = j.contains("lambda") ? get_num(j, "lambda", "topology") : 0.0;
  return validate_topology(std::move(t));
}

json topology_to_json(const Topology& t) {
  json j;
  j["capacities"] = t.capacities;
  j["types"] = json::array();
  for (const auto& ty : t.types) j["types"].push_back({{"servers", ty.servers}, {"p", ty.prob}});
  j["lambda"] = t.lambda;
  return j;
}

ServiceDistribution distribution_from_json(const json& j) {
  if (!j.contains("kind")) throw ConfigError("distribution: missing \"kind\"");
  std::string kind = j["kind"].get<std::string>();
  if (kind == "exponential") {
    reject_unknown(j, {"kind"}, "distribution");
    return ServiceDistribution::exponential();
  }
  if (kind == "deterministic") {
    reject_unknown(j, {"kind"}, "distribution");
    return ServiceDistribution::deterministic();
  }
  if (kind == "hyperexp") {
    reject_unknown(j, {"kind", "q", "mu1", "mu2"}, "distribution");
    return ServiceDistribution::hyperexp(get_num(j, "q", "distribution"),
                                         get_num(j, "mu1", "distribution"),
                                         get_num(j, "mu2", "distribution"));
  }
  if (kind == "bounded_pareto") {
    reject_unknown(j, {"kind", "alpha", "k", "qmax"}, "distribution");
    return ServiceDistribution::bounded_pareto(get_num(j, "alpha", "distribution"),
                                               get_num(j, "k", "distribution"),
                                               get_num(j, "qmax", "distribution"));
  }
  throw ConfigError("distribution: unknown kind \"" + kind + "\"");
}

json distribution_to_json(const ServiceDistribution& d) {
  json j;
  j["kind"] = d.kind_name();
  if (d.kind == ServiceDistribution::Kind::Hyperexponential) {
    j["q"] = d.q;
    j["mu1"] = d.mu1;
    j["mu2"] = d.mu2;
  } else if (d.kind == ServiceDistribution::Kind::BoundedPareto) {
    j["alpha"] = d.alpha;
    j["k"] = d.k;
    j["qmax"] = d.qmax;
  }
  return j;
}

CapacityModulation modulation_from_json(const json& j) {
  reject_unknown(j, {"epsilon", "slowdowns"}, "modulation");
  double eps = get_num(j, "epsilon", "modulation");
  if (!j.contains("slowdowns")) throw ConfigError("modulation: missing \"slowdowns\"");
  if (j["slowdowns"].is_string()) {
    if (j["slowdowns"].get<std::string>() == "dolly") return dolly_modulation(eps);
    throw ConfigError("modulation: unknown slowdown preset");
  }
  CapacityModulation m;
  m.epsilon = eps;
  for (const auto& e : j["slowdowns"]) {
    reject_unknown(e, {"s", "p"}, "modulation.slowdowns");
    m.pmf.push_back({get_num(e, "s", "modulation"), get_num(e, "p", "modulation")});
  }
  m.validate();
  return m;
}

json modulation_to_json(const CapacityModulation& m) {
  json j;
  j["epsilon"] = m.epsilon;
  j["slowdowns"] = json::array();
  for (const auto& e : m.pmf) j["slowdowns"].push_back({{"s", e.s}, {"p", e.p}});
  return j;
}

json stability_report_to_json(const StabilityReport& r) {
  json j;
  j["stages"] = json::array();
  for (const auto& st : r.chain.stages) {
    json stage;
    stage["S"] = st.servers;
    stage["L"] = st.least_loaded;
    stage["CAR"] = round12(st.car);
    json ratios = json::object();
    for (const auto& [s, ratio] : st.ratios) ratios[std::to_string(s)] = round12(ratio);
    stage["ratios"] = ratios;
    if (!st.typeless.empty()) stage["typeless"] = st.typeless;
    j["stages"].push_back(stage);
  }
  j["i_star"] = r.chain.i_star();
  j["lambda_R"] = round12(r.lambda_R);
  j["lambda_B"] = round12(r.lambda_B);
  j["lambda_J"] = round12(r.lambda_J);
  j["lambda"] = round12(r.lambda);
  json verdicts = json::object();
  for (std::size_t s = 0; s < r.verdicts.size(); ++s)
    verdicts[std::to_string(s)] = verdict_name(r.verdicts[s]);
  j["verdicts"] = verdicts;
  j["redundancy_beats_bernoulli"] = r.redundancy_beats_bernoulli;
  json rc = json::array();
  for (std::size_t c = 0; c < r.chain.least_loaded_of.size(); ++c)
    rc.push_back({{"type", c},
                  {"R", r.chain.least_loaded_of[c]},
                  {"stage", r.chain.death_stage_of_type[c]}});
  j["least_loaded"] = rc;
  return j;
}

StabilityReport stability_report_from_json(const json& j) {
  StabilityReport r;
  for (const auto& stage : j.at("stages")) {
    ChainStage st;
    st.servers = stage.at("S").get<std::vector<int>>();
    st.least_loaded = stage.at("L").get<std::vector<int>>();
    st.car = stage.at("CAR").get<double>();
    for (auto it = stage.at("ratios").begin(); it != stage.at("ratios").end(); ++it)
      st.ratios.emplace_back(std::stoi(it.key()), it.value().get<double>());
    std::sort(st.ratios.begin(), st.ratios.end());
    if (stage.contains("typeless")) st.typeless = stage["typeless"].get<std::vector<int>>();
    r.chain.stages.push_back(std::move(st));
  }
  r.lambda_R = j.at("lambda_R").get<double>();
  r.lambda_B = j.at("lambda_B").get<double>();
  r.lambda_J = j.at("lambda_J").get<double>();
  r.lambda = j.at("lambda").get<double>();
  const auto& verdicts = j.at("verdicts");
  r.verdicts.resize(verdicts.size());
  for (auto it = verdicts.begin(); it != verdicts.end(); ++it) {
    std::string name = it.value().get<std::string>();
    Verdict v = name == "stable" ? Verdict::Stable
                                 : (name == "unstable" ? Verdict::Unstable : Verdict::Critical);
    r.verdicts[std::stoul(it.key())] = v;
  }
  r.redundancy_beats_bernoulli = j.at("redundancy_beats_bernoulli").get<bool>();
  for (const auto& e : j.at("least_loaded")) {
    r.chain.least_loaded_of.push_back(e.at("R").get<std::vector<int>>());
    r.chain.death_stage_of_type.push_back(e.at("stage").get<int>());
  }
  return r;
}

SimConfig sim_config_from_json(const json& j, const Topology& top) {
  reject_unknown(j,
                 {"dispatch", "scheduling", "service", "modulation", "variant", "lb_stage",
                  "seed", "busy_periods", "warmup_periods", "max_events", "initial_jobs"},
                 "sim");
  SimConfig cfg;
  cfg.topology = top;
  if (j.contains("dispatch")) cfg.dispatch = dispatch_from_string(j["dispatch"].get<std::string>());
  if (j.contains("scheduling"))
    cfg.scheduling = scheduling_from_string(j["scheduling"].get<std::string>());
  if (j.contains("service")) cfg.service = distribution_from_json(j["service"]);
  if (j.contains("modulation")) cfg.modulation = modulation_from_json(j["modulation"]);
  if (j.contains("variant")) cfg.variant = variant_from_string(j["variant"].get<std::string>());
  if (j.contains("lb_stage")) cfg.lb_stage = j["lb_stage"].get<int>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("busy_periods")) cfg.busy_periods = j["busy_periods"].get<long>();
  if (j.contains("warmup_periods")) cfg.warmup_periods = j["warmup_periods"].get<long>();
  if (j.contains("max_events")) cfg.max_events = j["max_events"].get<long>();
  if (j.contains("initial_jobs")) cfg.initial_jobs = j["initial_jobs"].get<std::vector<long>>();
  cfg.validate();
  return cfg;
}

json sim_result_to_json(const SimResult& r) {
  json j;
  j["mean_jobs"] = round12(r.mean_jobs);
  j["ci_half_width"] = round12(r.ci_half_width);
  json per_server = json::array();
  for (double v : r.per_server_mean_copies) per_server.push_back(round12(v));
  j["per_server_mean_copies"] = per_server;
  j["completed_jobs"] = r.completed_jobs;
  j["cycles"] = r.cycles;
  j["diverged"] = r.diverged;
  j["sim_time"] = round12(r.sim_time);
  j["seed"] = r.seed;
  return j;
}

SweepSpec sweep_spec_from_json(const json& j) {
  reject_unknown(j,
                 {"family", "K", "d", "nested", "mu_grid", "M_grid", "p12_grid", "mu1", "mu2",
                  "p1", "lambda_grid", "epsilon", "policies", "schedulings", "service", "seed",
                  "busy_periods", "max_events", "max_ci"},
                 "sweep");
  SweepSpec s;
  if (!j.contains("family")) throw ConfigError("sweep: missing \"family\"");
  s.family = j["family"].get<std::string>();
  if (j.contains("K")) s.K = j["K"].get<int>();
  if (j.contains("d")) s.d = j["d"].get<int>();
  if (j.contains("nested")) s.nested = j["nested"].get<std::string>();
  if (j.contains("mu_grid")) s.mu_grid = j["mu_grid"].get<std::vector<double>>();
  if (j.contains("M_grid")) s.M_grid = j["M_grid"].get<std::vector<double>>();
  if (j.contains("p12_grid")) s.p12_grid = j["p12_grid"].get<std::vector<double>>();
  if (j.contains("mu1")) s.mu1 = j["mu1"].get<double>();
  if (j.contains("mu2")) s.mu2 = j["mu2"].get<double>();
  if (j.contains("p1")) s.p1 = j["p1"].get<double>();
  if (j.contains("lambda_grid")) s.lambda_grid = j["lambda_grid"].get<std::vector<double>>();
  if (j.contains("epsilon")) s.epsilon = j["epsilon"].get<double>();
  if (j.contains("policies"))
    for (const auto& p : j["policies"])
      s.policies.push_back(dispatch_from_string(p.get<std::string>()));
  if (j.contains("schedulings")) {
    s.schedulings.clear();
    for (const auto& p : j["schedulings"])
      s.schedulings.push_back(scheduling_from_string(p.get<std::string>()));
  }
  if (j.contains("service")) s.service = distribution_from_json(j["service"]);
  if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("busy_periods")) s.busy_periods = j["busy_periods"].get<long>();
  if (j.contains("max_events")) s.max_events = j["max_events"].get<long>();
  if (j.contains("max_ci")) s.max_ci = j["max_ci"].get<double>();
  s.validate();
  return s;
}

std::string sweep_manifest_json(const SweepSpec& spec) {
  json j;
  j["tool"] = "redlab 0.1.0";
  j["seed"] = spec.seed;
  j["busy_periods"] = spec.busy_periods;
  j["family"] = spec.family;
  j["service"] = distribution_to_json(spec.service);
  json pol = json::array();
  for (Dispatch d : spec.policies) pol.push_back(dispatch_name(d));
  j["policies"] = pol;
  json sch = json::array();
  for (Scheduling s : spec.schedulings) sch.push_back(scheduling_name(s));
  j["schedulings"] = sch;
  j["threads"] = worker_count();
  return j.dump(2);
}

ConfigFile load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  reject_unknown(j, {"topology", "sim", "sweep"}, "config");
  ConfigFile cfg;
  if (j.contains("topology")) {
    if (j["topology"].is_string()) {
      std::ifstream tin(j["topology"].get<std::string>());
      if (!tin) throw ConfigError("cannot open topology file: " + j["topology"].get<std::string>());
      json tj;
      try {
        tin >> tj;
      } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed topology JSON: ") + e.what());
      }
      cfg.topology = topology_from_json(tj);
    } else {
      cfg.topology = topology_from_json(j["topology"]);
    }
    cfg.has_topology = true;
  }
  if (j.contains("sim")) cfg.sim = j["sim"];
  if (j.contains("sweep")) cfg.sweep = j["sweep"];
  return cfg;
}

std::string trajectory_csv(const SimResult& r) {
  std::ostringstream os;
  os << "time";
  if (!r.traj_copies.empty())
    for (std::size_t s = 0; s < r.traj_copies.front().size(); ++s) os << ",M" << (s + 1);
  os << "\n";
  for (std::size_t i = 0; i < r.traj_time.size(); ++i) {
    os << format12(r.traj_time[i]);
    for (long m : r.traj_copies[i]) os << "," << m;
    os << "\n";
  }
  return os.str();
}

std::string fluid_csv(const FluidTrajectory& f) {
  std::ostringstream os;
  os << "time,server,mass\n";
  for (std::size_t s = 0; s < f.knots.size(); ++s)
    for (double t : f.breakpoints)
      os << format12(t) << "," << s << "," << format12(f.mass_at(static_cast<int>(s), t)) << "\n";
  return os.str();
}

std::string fluid_events_json(const FluidTrajectory& f) {
  json j = json::array();
  for (const auto& e : f.drain_events)
    j.push_back({{"time", round12(e.time)}, {"servers", e.servers}});
  json out;
  out["drain_events"] = j;
  out["non_draining_stage"] = f.non_draining_stage;
  out["horizon"] = round12(f.horizon);
  return out.dump(2);
}

}  // namespace redlab
