#pragma once

#include <vector>

#include "redlab/distributions.hpp"
#include "redlab/stability.hpp"
#include "redlab/topology.hpp"

namespace redlab {

struct DrainEvent {
  double time = 0.0;
  std::vector<int> servers;
};

// Piecewise-linear per-server mass over time. Knots are (time, mass) pairs in
// increasing time; between knots the mass is linear, after the last knot it is
// constant.
struct FluidTrajectory {
  std::vector<double> breakpoints;
  std::vector<std::vector<std::pair<double, double>>> knots;  // per server
  std::vector<DrainEvent> drain_events;
  int non_draining_stage = 0;  // 0 = every stage drains
  double horizon = 0.0;

  double mass_at(int server, double t) const;
};

// Sequential drain schedule for the all-copies-served bound system with
// exponential services. Stage i's least-loaded servers sit at their initial
// mass until stages 1..i-1 have drained, then drain linearly with drift
// lambda * sum_{c in C_i(s)} p_c - mu_s. Mass carried at a server by types
// that left the recursion earlier is zeroed at the server's phase start
// rather than tracked through the transient. Servers that never enter an
// argmax set drain across the phase window of the stage their last type
// leaves in. If some stage has nonnegative drift the schedule stops there and
// reports it; the remaining servers keep their saturated slopes to the
// horizon.
FluidTrajectory ub_drain_schedule(const Topology& top, const std::vector<double>& initial_mass,
                                  const ServiceDistribution& service, double horizon_cap = 0.0);

// Scaled trajectory of the equalized-capacity bound system at a given stage:
// alpha(t) moves at slope lambda / CAR_stage - 1 while positive and absorbs
// at zero when the slope is negative.
struct AlphaTrajectory {
  double alpha0 = 0.0;
  double slope = 0.0;
  double hit_zero = 0.0;  // infinity when alpha never reaches 0
  double horizon = 0.0;

  double value(double t) const;
};

AlphaTrajectory lb_alpha_trajectory(const Topology& top, int stage, double alpha0, double horizon);

// Signed per-server drift at saturation: mu_s * (lambda / CAR_D(s) - 1) where
// D(s) is the first non-draining stage if it precedes the stage where s's
// last type leaves, else the latter. Servers hosting no types drain at -mu_s.
// Matches lambda * sum_{c in C_i(s)} p_c - mu_s on argmax members.
std::vector<double> classify_drifts(const Topology& top);

}  // namespace redlab
