#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "redlab/distributions.hpp"
#include "redlab/stability.hpp"
#include "redlab/topology.hpp"

namespace redlab {

enum class Dispatch { Redundancy, Bernoulli, Jsq };
enum class Scheduling { Ps, Fcfs, Ros };
enum class Variant { Original, UpperBound, LowerBound };

std::string dispatch_name(Dispatch d);
std::string scheduling_name(Scheduling s);
std::string variant_name(Variant v);
Dispatch dispatch_from_string(const std::string& s);
Scheduling scheduling_from_string(const std::string& s);
Variant variant_from_string(const std::string& s);

struct SimConfig {
  Topology topology;
  Dispatch dispatch = Dispatch::Redundancy;
  Scheduling scheduling = Scheduling::Ps;
  ServiceDistribution service = ServiceDistribution::exponential();
  std::optional<CapacityModulation> modulation;
  Variant variant = Variant::Original;
  int lb_stage = 1;  // recursion stage the lower-bound system equalizes at
  std::uint64_t seed = 1;
  long busy_periods = 100000;
  long warmup_periods = 0;
  long max_events = 200000000;  // divergence guard
  std::vector<long> initial_jobs;  // per-type counts at t=0, fresh service draws
  bool check_invariants = false;   // walk the full state at every event (tests)

  void validate() const;  // throws ConfigError
};

// Snapshot of one in-system job: its type, requirement, and per-server
// attained service.
struct JobRecord {
  int type = 0;
  double requirement = 0.0;
  double arrival_time = 0.0;
  std::map<int, double> attained;  // server -> a_{cjs}
};

struct SimResult {
  double mean_jobs = 0.0;       // time-average number of jobs in the system
  double ci_half_width = 0.0;   // 95%, regenerative ratio estimator
  std::vector<double> per_server_mean_copies;
  long completed_jobs = 0;
  long cycles = 0;  // regeneration cycles used by the estimator
  bool diverged = false;
  double sim_time = 0.0;
  std::uint64_t seed = 0;

  // trajectory mode only: per-event (time, copies per server)
  std::vector<double> traj_time;
  std::vector<std::vector<long>> traj_copies;
};

// Event-driven run collecting regenerative statistics over busy periods.
SimResult run(const SimConfig& cfg);

// Horizon-bounded run that records the per-server copy counts at every event.
// No regeneration statistics; mean_jobs is the plain time average.
SimResult run_trajectory(const SimConfig& cfg, double horizon);

struct DominanceViolation {
  double time = 0.0;
  int type = 0;
  std::string which;  // "ub" or "lb"
  long original = 0, bound = 0;
};

struct CoupledBoundsReport {
  long events = 0;
  long ub_violations = 0;
  long lb_violations = 0;
  std::vector<DominanceViolation> first_violations;  // at most one per kind
};

// Runs the original system, the all-least-loaded-copies-served bound and the
// equalized-capacity bound on one coupled arrival/size stream, checking after
// every event that the original job counts are pairwise sandwiched between
// the two bounds. Any violation indicates a bug and is reported with its
// event.
CoupledBoundsReport run_coupled_bounds(const SimConfig& cfg, long events);

struct FrontierPoint {
  double lambda = 0.0;
  bool diverged = false;
  double slope = 0.0;
  double t_stat = 0.0;
};

// For each lambda on the grid: run max_events events from empty and flag
// divergence when the total copy count trends up over the last half of the
// run (OLS on time-bucket means; slope > 0 with t-statistic > 3). A
// heuristic, not a proof.
std::vector<FrontierPoint> estimate_stability_frontier(const Topology& base, Dispatch dispatch,
                                                       Scheduling scheduling,
                                                       const std::vector<double>& lambda_grid,
                                                       long max_events, std::uint64_t seed);

// OLS slope + naive t-statistic of y against x.
struct SlopeFit {
  double slope = 0.0;
  double t_stat = 0.0;
};
SlopeFit fit_slope(const std::vector<double>& x, const std::vector<double>& y);

// Time-weighted bucket means of a step function sampled at event times.
std::vector<std::pair<double, double>> bucket_means(const std::vector<double>& t,
                                                    const std::vector<double>& v, std::size_t lo,
                                                    int buckets);

}  // namespace redlab
