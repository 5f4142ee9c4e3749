#include "redlab/fluid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "redlab/common.hpp"

namespace redlab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double FluidTrajectory::mass_at(int server, double t) const {
  const auto& k = knots[server];
  if (k.empty()) return 0.0;
  if (t <= k.front().first) return k.front().second;
  for (std::size_t i = 1; i < k.size(); ++i) {
    if (t <= k[i].first) {
      double t0 = k[i - 1].first, t1 = k[i].first;
      double m0 = k[i - 1].second, m1 = k[i].second;
      if (t1 <= t0) return m1;
      return m0 + (m1 - m0) * (t - t0) / (t1 - t0);
    }
  }
  return k.back().second;
}

FluidTrajectory ub_drain_schedule(const Topology& top, const std::vector<double>& initial_mass,
                                  const ServiceDistribution& service, double horizon_cap) {
  if (service.kind != ServiceDistribution::Kind::Exponential)
    throw ConfigError("fluid drain schedule requires exponential services, got " +
                      service.kind_name());
  const int K = top.num_servers();
  if (static_cast<int>(initial_mass.size()) != K)
    throw ConfigError("initial mass count does not match the server count");
  for (int s = 0; s < K; ++s)
    if (initial_mass[s] < 0.0) throw ConfigError("initial mass must be nonnegative");

  SubsystemChain chain = subsystem_chain(top);
  const double lambda = top.lambda;

  FluidTrajectory out;
  out.knots.assign(K, {});
  std::vector<char> placed(K, 0);

  // phase_start[i] = instant stage i begins draining (1-based stages)
  std::vector<double> phase_start(chain.i_star() + 2, 0.0);
  double t = 0.0;
  double last_drain = 0.0;

  int stop_stage = 0;
  for (int i = 1; i <= chain.i_star(); ++i) {
    phase_start[i] = t;
    const ChainStage& st = chain.stages[i - 1];
    if (lambda >= st.car) {  // this stage never empties
      stop_stage = i;
      break;
    }
    double phase_end = t;
    for (int s : st.least_loaded) {
      double mass = 0.0;
      for (std::size_t c : st.types)
        if (top.types[c].contains(s)) mass += top.types[c].prob;
      double drift = lambda * mass - top.capacities[s];  // < 0 here
      double dur = initial_mass[s] > 0.0 ? initial_mass[s] / (-drift) : 0.0;
      auto& k = out.knots[s];
      k.push_back({0.0, initial_mass[s]});
      if (t > 0.0) k.push_back({t, initial_mass[s]});
      k.push_back({t + dur, 0.0});
      placed[s] = 1;
      phase_end = std::max(phase_end, t + dur);
    }
    // typeless servers dropped at stage 1 hold no types at all: they clear
    // their initial mass alone at full speed
    for (int s : st.typeless) {
      if (chain.last_stage_of_server[s] == 0) {
        double dur = initial_mass[s] / top.capacities[s];
        out.knots[s] = {{0.0, initial_mass[s]}, {dur, 0.0}};
        placed[s] = 1;
      }
    }
    phase_start[i + 1] = phase_end;
    last_drain = std::max(last_drain, phase_end);
    t = phase_end;
  }

  // servers that never enter an argmax set: their remaining mass empties with
  // the stage their last hosted type leaves in
  for (int s = 0; s < K; ++s) {
    if (placed[s]) continue;
    int d = chain.last_stage_of_server[s];
    if (d == 0) {  // hosts nothing
      double dur = initial_mass[s] / top.capacities[s];
      out.knots[s] = {{0.0, initial_mass[s]}, {dur, 0.0}};
      last_drain = std::max(last_drain, dur);
      placed[s] = 1;
      continue;
    }
    if (stop_stage != 0 && d >= stop_stage) continue;  // handled below
    double t0 = phase_start[d], t1 = phase_start[d + 1];
    auto& k = out.knots[s];
    k.push_back({0.0, initial_mass[s]});
    if (t0 > 0.0) k.push_back({t0, initial_mass[s]});
    k.push_back({t1 > t0 ? t1 : t0, 0.0});
    placed[s] = 1;
    last_drain = std::max(last_drain, t1);
  }

  out.non_draining_stage = stop_stage;
  double horizon = horizon_cap > 0.0 ? horizon_cap : (last_drain > 0.0 ? 5.0 * last_drain : 1.0);
  out.horizon = std::max(horizon, last_drain);

  if (stop_stage != 0) {
    // leftover servers keep their saturated slope from the stop instant on
    const ChainStage& st = chain.stages[stop_stage - 1];
    double t0 = phase_start[stop_stage];
    for (int s = 0; s < K; ++s) {
      if (placed[s]) continue;
      double mass = 0.0;
      for (std::size_t c : st.types)
        if (top.types[c].contains(s)) mass += top.types[c].prob;
      double slope = top.capacities[s] * (lambda / st.car - 1.0);
      if (mass == 0.0 && chain.last_stage_of_server[s] < stop_stage) slope = 0.0;
      auto& k = out.knots[s];
      k.push_back({0.0, initial_mass[s]});
      if (t0 > 0.0) k.push_back({t0, initial_mass[s]});
      k.push_back({out.horizon, initial_mass[s] + slope * (out.horizon - t0)});
      placed[s] = 1;
    }
  }

  // drain events: group servers by the instant they empty
  std::vector<std::pair<double, int>> drains;
  for (int s = 0; s < K; ++s) {
    const auto& k = out.knots[s];
    if (!k.empty() && k.back().second == 0.0 && initial_mass[s] > 0.0)
      drains.push_back({k.back().first, s});
  }
  std::sort(drains.begin(), drains.end());
  for (const auto& [time, s] : drains) {
    if (!out.drain_events.empty() && std::abs(out.drain_events.back().time - time) < 1e-12) {
      out.drain_events.back().servers.push_back(s);
    } else {
      out.drain_events.push_back({time, {s}});
    }
  }

  for (int s = 0; s < K; ++s)
    for (const auto& [time, mass] : out.knots[s]) out.breakpoints.push_back(time);
  std::sort(out.breakpoints.begin(), out.breakpoints.end());
  out.breakpoints.erase(std::unique(out.breakpoints.begin(), out.breakpoints.end()),
                        out.breakpoints.end());
  return out;
}

double AlphaTrajectory::value(double t) const {
  if (slope < 0.0 && t >= hit_zero) return 0.0;
  return alpha0 + slope * t;
}

AlphaTrajectory lb_alpha_trajectory(const Topology& top, int stage, double alpha0,
                                    double horizon) {
  if (alpha0 < 0.0) throw ConfigError("alpha0 must be nonnegative");
  SubsystemChain chain = subsystem_chain(top);
  if (stage < 1 || stage > chain.i_star()) {
    std::ostringstream os;
    os << "stage " << stage << " out of range (i* = " << chain.i_star() << ")";
    throw ConfigError(os.str());
  }
  AlphaTrajectory a;
  a.alpha0 = alpha0;
  a.slope = top.lambda / chain.car(stage) - 1.0;
  a.hit_zero = a.slope < 0.0 ? alpha0 / (-a.slope) : kInf;
  a.horizon = horizon;
  return a;
}

std::vector<double> classify_drifts(const Topology& top) {
  SubsystemChain chain = subsystem_chain(top);
  const double lambda = top.lambda;

  int iota = chain.i_star() + 1;
  for (int i = 1; i <= chain.i_star(); ++i) {
    if (lambda > chain.car(i)) {
      iota = i;
      break;
    }
  }

  std::vector<double> drift(top.num_servers());
  for (int s = 0; s < top.num_servers(); ++s) {
    int d = chain.last_stage_of_server[s];
    if (d == 0) {
      drift[s] = -top.capacities[s];
      continue;
    }
    int governing = std::min(d, iota <= chain.i_star() ? iota : d);
    drift[s] = top.capacities[s] * (lambda / chain.car(governing) - 1.0);
  }
  return drift;
}

}  // namespace redlab
