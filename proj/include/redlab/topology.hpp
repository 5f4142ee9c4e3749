#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace redlab {

// A job type: the set of servers its copies may be sent to, and the
// probability that an arriving job is of this type.
struct JobType {
  std::vector<int> servers;  // sorted, duplicate-free, 0-based
  double prob = 0.0;

  bool contains(int s) const;
  std::uint64_t mask() const;
};

// K parallel servers with fixed capacities, a set of job types over subsets
// of the servers, and a Poisson arrival rate.
struct Topology {
  std::vector<double> capacities;  // mu_s, one per server
  std::vector<JobType> types;
  double lambda = 0.0;

  int num_servers() const { return static_cast<int>(capacities.size()); }
  int num_types() const { return static_cast<int>(types.size()); }

  // Sum of type probabilities routed through server s.
  double type_mass_at(int s) const;
};

// Checks every structural invariant and returns the topology unchanged.
// Throws ConfigError naming the first violated invariant. Probabilities are
// never silently renormalized.
Topology validate_topology(Topology t);

// All size-d subsets of K servers, each with probability 1/C(K,d).
Topology make_red_d(int K, int d, std::vector<double> capacities, double lambda = 0.0);

enum class NestedKind { N, W, WW, WWWW };

// Canonical nested topologies. Type order (0-based servers):
//   N:    {1}, {0,1}
//   W:    {0}, {1}, {0,1}
//   WW:   {0},{1},{2},{3},{0,1},{2,3},{0,1,2,3}
//   WWWW: the WW list on servers 0-3, the WW list on servers 4-7, then {0..7}
// Types given probability exactly 0 are dropped.
Topology make_nested(NestedKind kind, std::vector<double> capacities,
                     std::vector<double> probs, double lambda = 0.0);

NestedKind nested_kind_from_string(const std::string& s);

// Linear capacity ramp 1 .. M over K servers.
std::vector<double> linear_capacities(int K, double M);

// Geometric capacities mu^(k-1), k = 1..K.
std::vector<double> geometric_capacities(int K, double mu);

double binomial(int n, int k);

}  // namespace redlab
