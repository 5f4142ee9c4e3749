#include "redlab/topology.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "redlab/common.hpp"

namespace redlab {

bool JobType::contains(int s) const {
  return std::binary_search(servers.begin(), servers.end(), s);
}

std::uint64_t JobType::mask() const {
  std::uint64_t m = 0;
  for (int s : servers) m |= (std::uint64_t{1} << s);
  return m;
}

double Topology::type_mass_at(int s) const {
  double sum = 0.0;
  for (const auto& t : types)
    if (t.contains(s)) sum += t.prob;
  return sum;
}

Topology validate_topology(Topology t) {
  const int K = t.num_servers();
  if (K == 0) throw ConfigError("topology has no servers");
  if (K > 64) throw ConfigError("topology exceeds the supported 64 servers");
  for (int s = 0; s < K; ++s) {
    if (!(t.capacities[s] > 0.0) || !std::isfinite(t.capacities[s])) {
      std::ostringstream os;
      os << "capacity of server " << s << " must be strictly positive, got " << t.capacities[s];
      throw ConfigError(os.str());
    }
  }
  if (t.types.empty()) throw ConfigError("topology has no job types");

  std::set<std::vector<int>> seen;
  double prob_sum = 0.0;
  for (std::size_t i = 0; i < t.types.size(); ++i) {
    auto& ty = t.types[i];
    if (ty.servers.empty()) {
      std::ostringstream os;
      os << "type " << i << " has an empty server set";
      throw ConfigError(os.str());
    }
    std::sort(ty.servers.begin(), ty.servers.end());
    for (std::size_t j = 0; j < ty.servers.size(); ++j) {
      int s = ty.servers[j];
      if (s < 0 || s >= K) {
        std::ostringstream os;
        os << "type " << i << ": server index out of range (" << s << " with K=" << K << ")";
        throw ConfigError(os.str());
      }
      if (j > 0 && ty.servers[j] == ty.servers[j - 1]) {
        std::ostringstream os;
        os << "type " << i << " lists server " << s << " twice";
        throw ConfigError(os.str());
      }
    }
    if (!seen.insert(ty.servers).second) {
      std::ostringstream os;
      os << "duplicate type: two types share the same server set (type " << i << ")";
      throw ConfigError(os.str());
    }
    if (!(ty.prob > 0.0)) {
      std::ostringstream os;
      os << "type " << i << " must have probability > 0, got " << ty.prob;
      throw ConfigError(os.str());
    }
    prob_sum += ty.prob;
  }
  if (std::abs(prob_sum - 1.0) > tol::kProbSum) {
    std::ostringstream os;
    os << "probabilities sum to " << prob_sum;
    throw ConfigError(os.str());
  }
  if (!(t.lambda >= 0.0) || !std::isfinite(t.lambda))
    throw ConfigError("lambda must be nonnegative and finite");
  return t;
}

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

Topology make_red_d(int K, int d, std::vector<double> capacities, double lambda) {
  if (d < 1 || d > K) {
    std::ostringstream os;
    os << "redundancy degree d=" << d << " must satisfy 1 <= d <= K=" << K;
    throw ConfigError(os.str());
  }
  if (static_cast<int>(capacities.size()) != K)
    throw ConfigError("capacity count does not match K");

  Topology t;
  t.capacities = std::move(capacities);
  t.lambda = lambda;
  const double p = 1.0 / binomial(K, d);

  // enumerate size-d subsets in lexicographic order
  std::vector<int> idx(d);
  for (int i = 0; i < d; ++i) idx[i] = i;
  while (true) {
    t.types.push_back({idx, p});
    int i = d - 1;
    while (i >= 0 && idx[i] == K - d + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < d; ++j) idx[j] = idx[j - 1] + 1;
  }
  return validate_topology(std::move(t));
}

namespace {

std::vector<std::vector<int>> nested_type_sets(NestedKind kind) {
  switch (kind) {
    case NestedKind::N:
      return {{1}, {0, 1}};
    case NestedKind::W:
      return {{0}, {1}, {0, 1}};
    case NestedKind::WW:
      return {{0}, {1}, {2}, {3}, {0, 1}, {2, 3}, {0, 1, 2, 3}};
    case NestedKind::WWWW: {
      std::vector<std::vector<int>> out = {{0}, {1}, {2}, {3}, {0, 1}, {2, 3}, {0, 1, 2, 3}};
      for (auto base : {std::vector<int>{4}, {5}, {6}, {7}, {4, 5}, {6, 7}, {4, 5, 6, 7}})
        out.push_back(base);
      out.push_back({0, 1, 2, 3, 4, 5, 6, 7});
      return out;
    }
  }
  throw ConfigError("unknown nested kind");
}

}  // namespace

Topology make_nested(NestedKind kind, std::vector<double> capacities,
                     std::vector<double> probs, double lambda) {
  auto sets = nested_type_sets(kind);
  const std::size_t K = sets.back().size();
  if (capacities.size() != K || probs.size() != sets.size()) {
    std::ostringstream os;
    os << "nested model expects " << K << " capacities and " << sets.size()
       << " probabilities, got " << capacities.size() << "/" << probs.size();
    throw ConfigError(os.str());
  }
  Topology t;
  t.capacities = std::move(capacities);
  t.lambda = lambda;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    if (probs[i] == 0.0) continue;  // zero-probability types do not exist
    t.types.push_back({sets[i], probs[i]});
  }
  return validate_topology(std::move(t));
}

NestedKind nested_kind_from_string(const std::string& s) {
  if (s == "N") return NestedKind::N;
  if (s == "W") return NestedKind::W;
  if (s == "WW") return NestedKind::WW;
  if (s == "WWWW") return NestedKind::WWWW;
  throw ConfigError("unknown nested kind: " + s);
}

std::vector<double> linear_capacities(int K, double M) {
  std::vector<double> mu(K);
  for (int k = 0; k < K; ++k)
    mu[k] = K == 1 ? M : 1.0 + (M - 1.0) / (K - 1) * k;
  return mu;
}

std::vector<double> geometric_capacities(int K, double mu) {
  std::vector<double> out(K);
  double v = 1.0;
  for (int k = 0; k < K; ++k) {
    out[k] = v;
    v *= mu;
  }
  return out;
}

}  // namespace redlab
