#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "redlab/topology.hpp"

namespace testutil {

// Random valid topology for property tests. Types are distinct random
// subsets; probabilities are bounded away from zero so ratios stay
// well-conditioned.
inline redlab::Topology random_topology(std::mt19937_64& gen, int max_servers = 6,
                                        int max_types = 8) {
  std::uniform_int_distribution<int> ksel(2, max_servers);
  int K = ksel(gen);
  redlab::Topology t;
  std::uniform_real_distribution<double> cap(0.3, 5.0);
  for (int s = 0; s < K; ++s) t.capacities.push_back(cap(gen));

  std::uniform_int_distribution<int> tsel(1, max_types);
  int want = tsel(gen);
  std::set<std::vector<int>> sets;
  std::uniform_int_distribution<int> coin(0, 1);
  int guard = 0;
  while (static_cast<int>(sets.size()) < want && guard++ < 200) {
    std::vector<int> sub;
    for (int s = 0; s < K; ++s)
      if (coin(gen)) sub.push_back(s);
    if (!sub.empty()) sets.insert(sub);
  }
  std::uniform_real_distribution<double> w(0.05, 1.0);
  double total = 0.0;
  for (const auto& sub : sets) {
    double p = w(gen);
    t.types.push_back({sub, p});
    total += p;
  }
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < t.types.size(); ++i) {
    t.types[i].prob /= total;
    acc += t.types[i].prob;
  }
  t.types.back().prob = 1.0 - acc;  // exact unit sum
  return redlab::validate_topology(std::move(t));
}

// Exact max-min static split value for small systems: minimize over nonempty
// type subsets A the ratio (capacity of the union of their server sets) /
// (probability mass of A).
inline double lambda_J_oracle(const redlab::Topology& t) {
  int T = t.num_types();
  double best = std::numeric_limits<double>::infinity();
  for (int mask = 1; mask < (1 << T); ++mask) {
    double pmass = 0.0;
    std::set<int> servers;
    for (int c = 0; c < T; ++c) {
      if (!(mask & (1 << c))) continue;
      pmass += t.types[c].prob;
      servers.insert(t.types[c].servers.begin(), t.types[c].servers.end());
    }
    double cap = 0.0;
    for (int s : servers) cap += t.capacities[s];
    best = std::min(best, cap / pmass);
  }
  return best;
}

}  // namespace testutil
