#pragma once

#include <functional>
#include <string>
#include <vector>

#include "redlab/topology.hpp"

namespace redlab {

// One stage of the subsystem recursion. `servers` is the live server set at
// stage entry; `ratios` holds the capacity-to-fraction-of-arrival ratio
// mu_s / sum_{c in C_i(s)} p_c for every live server that still hosts types.
// Servers whose ratio attains the stage maximum (within a 1e-9 relative tie
// window) form `least_loaded`; servers hosting no remaining types are dropped
// as `typeless` without entering the argmax.
struct ChainStage {
  std::vector<int> servers;                       // S_i
  std::vector<std::size_t> types;                 // indices into topology.types = C_i
  std::vector<std::pair<int, double>> ratios;     // (server, ratio), typeless excluded
  std::vector<int> least_loaded;                  // L_i
  std::vector<int> typeless;                      // dropped at this stage
  double car = 0.0;                               // CAR_i
};

struct SubsystemChain {
  std::vector<ChainStage> stages;                    // 1 .. i*
  std::vector<std::vector<int>> least_loaded_of;     // R(c), per type index
  std::vector<int> death_stage_of_type;              // 1-based stage where type c leaves
  std::vector<int> last_stage_of_server;             // max death stage over hosted types; 0 = hosts none

  int i_star() const { return static_cast<int>(stages.size()); }
  double car(int stage_1based) const { return stages[stage_1based - 1].car; }

  // min over stages of CAR_i
  double min_car() const;
};

// Runs the full recursion until the type set empties.
SubsystemChain subsystem_chain(const Topology& top);

// Arrival-rate frontier under redundancy dispatch: min_i CAR_i.
// Ignores top.lambda.
double lambda_R(const Topology& top);

// Frontier under uniform single-copy routing:
// min_s mu_s / sum_{c in C(s)} p_c / |c|.
double lambda_B(const Topology& top);

// Frontier of the best static split, solved by binary search on lambda with a
// max-flow feasibility oracle (types -> compatible servers). 60 iterations on
// [0, sum mu], giving well below 1e-9 relative error.
double lambda_J(const Topology& top);

// Closed form for redundancy-d with homogeneous arrivals and strictly
// increasing capacities: min_{i=d..K} C(K,d)/C(i-1,d-1) * mu_i.
// Throws ConfigError on unsorted or tied capacities.
double red_d_lambda_R(int K, int d, const std::vector<double>& capacities);

// Closed form for the two-server model with types {2} (prob p) and {1,2}.
double n_model_lambda_R(double mu1, double mu2, double p);

// Closed form for the two-server model with types {1},{2},{1,2}. Servers are
// relabeled internally so that the higher-loaded one plays server 1.
double w_model_lambda_R(double mu1, double mu2, double p1, double p2, double p12);

enum class Verdict { Stable, Unstable, Critical };

std::string verdict_name(Verdict v);

// Per-server verdict at top.lambda. A server's fate is governed by the stages
// up to the one where its last hosted type leaves the recursion: stable iff
// lambda < CAR_l for all of them, unstable if lambda exceeds any, critical on
// exact equality. Servers hosting no types at all are always stable.
std::vector<Verdict> classify_servers(const Topology& top);

struct Improvement {
  bool redundancy_wins = false;  // lambda_R >= lambda_B
  double factor = 0.0;           // lambda_R / lambda_B
};

Improvement improvement_verdict(const Topology& top);

// Capacity level at which the redundancy and single-copy frontiers of a
// parameterized family coincide. Bisection to 1e-4; throws RuntimeError if
// lambda_R - lambda_B does not change sign on [lo, hi].
double mu_star(const std::function<Topology(double)>& family, double lo, double hi);

struct StabilityReport {
  SubsystemChain chain;
  double lambda_R = 0.0;
  double lambda_B = 0.0;
  double lambda_J = 0.0;
  double lambda = 0.0;  // the rate the verdicts were computed at
  std::vector<Verdict> verdicts;
  bool redundancy_beats_bernoulli = false;
};

StabilityReport analyze(const Topology& top);

}  // namespace redlab
