#include "redlab/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "redlab/common.hpp"
#include "redlab/maxflow.hpp"

namespace redlab {

double SubsystemChain::min_car() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& st : stages) m = std::min(m, st.car);
  return m;
}

SubsystemChain subsystem_chain(const Topology& top) {
  const int K = top.num_servers();
  SubsystemChain chain;
  chain.least_loaded_of.assign(top.types.size(), {});
  chain.death_stage_of_type.assign(top.types.size(), 0);
  chain.last_stage_of_server.assign(K, 0);

  std::vector<bool> live_server(K, true);
  std::vector<bool> live_type(top.types.size(), true);

  for (int stage_no = 1; stage_no <= K; ++stage_no) {
    ChainStage st;
    for (int s = 0; s < K; ++s)
      if (live_server[s]) st.servers.push_back(s);
    if (st.servers.empty()) break;

    // C_i = live types; they are subsets of S_i by construction
    std::vector<double> mass(K, 0.0);
    for (std::size_t c = 0; c < top.types.size(); ++c) {
      if (!live_type[c]) continue;
      st.types.push_back(c);
      for (int s : top.types[c].servers) mass[s] += top.types[c].prob;
    }
    if (st.types.empty()) break;  // i* reached at the previous stage

    // servers with no types left host nothing and leave the recursion here
    double best = 0.0;
    for (int s : st.servers) {
      if (mass[s] <= 0.0) {
        st.typeless.push_back(s);
        live_server[s] = false;
        continue;
      }
      double ratio = top.capacities[s] / mass[s];
      st.ratios.emplace_back(s, ratio);
      best = std::max(best, ratio);
    }
    st.car = best;
    for (const auto& [s, ratio] : st.ratios)
      if (ratio >= best * (1.0 - tol::kRatioTie)) st.least_loaded.push_back(s);

    for (int s : st.least_loaded) live_server[s] = false;
    for (std::size_t c : st.types) {
      std::vector<int> hit;
      for (int s : top.types[c].servers)
        if (std::find(st.least_loaded.begin(), st.least_loaded.end(), s) != st.least_loaded.end())
          hit.push_back(s);
      if (!hit.empty()) {
        live_type[c] = false;
        chain.least_loaded_of[c] = hit;           // R(c)
        chain.death_stage_of_type[c] = stage_no;  // unique stage with R(c) in L_i
      }
    }
    chain.stages.push_back(std::move(st));
  }

  for (std::size_t c = 0; c < top.types.size(); ++c)
    for (int s : top.types[c].servers)
      chain.last_stage_of_server[s] =
          std::max(chain.last_stage_of_server[s], chain.death_stage_of_type[c]);
  return chain;
}

double lambda_R(const Topology& top) { return subsystem_chain(top).min_car(); }

double lambda_B(const Topology& top) {
  double best = std::numeric_limits<double>::infinity();
  for (int s = 0; s < top.num_servers(); ++s) {
    double mass = 0.0;
    for (const auto& ty : top.types)
      if (ty.contains(s)) mass += ty.prob / static_cast<double>(ty.servers.size());
    if (mass > 0.0) best = std::min(best, top.capacities[s] / mass);
  }
  return best;
}

namespace {

// Can demands lambda*p_c be split across compatible servers within capacity?
bool split_feasible(const Topology& top, double lambda) {
  const int T = top.num_types();
  const int K = top.num_servers();
  const int source = 0, sink = 1 + T + K;
  MaxFlow mf(2 + T + K);
  double demand = 0.0;
  for (int c = 0; c < T; ++c) {
    double d = lambda * top.types[c].prob;
    demand += d;
    mf.add_edge(source, 1 + c, d);
    for (int s : top.types[c].servers)
      mf.add_edge(1 + c, 1 + T + s, std::numeric_limits<double>::infinity());
  }
  for (int s = 0; s < K; ++s) mf.add_edge(1 + T + s, sink, top.capacities[s]);
  double flow = mf.run(source, sink);
  return flow >= demand * (1.0 - 1e-12);
}

}  // namespace

double lambda_J(const Topology& top) {
  double lo = 0.0;
  double hi = std::accumulate(top.capacities.begin(), top.capacities.end(), 0.0);
  for (int it = 0; it < 60; ++it) {
    double mid = 0.5 * (lo + hi);
    if (split_feasible(top, mid))
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double red_d_lambda_R(int K, int d, const std::vector<double>& capacities) {
  if (static_cast<int>(capacities.size()) != K)
    throw ConfigError("capacity count does not match K");
  if (d < 1 || d > K) throw ConfigError("need 1 <= d <= K");
  for (int i = 1; i < K; ++i)
    if (!(capacities[i - 1] < capacities[i]))
      throw ConfigError("closed form requires strictly increasing capacities");
  double best = std::numeric_limits<double>::infinity();
  for (int i = d; i <= K; ++i) {
    double v = binomial(K, d) / binomial(i - 1, d - 1) * capacities[i - 1];
    best = std::min(best, v);
  }
  return best;
}

double n_model_lambda_R(double mu1, double mu2, double p) {
  if (!(mu1 > 0.0) || !(mu2 > 0.0)) throw ConfigError("capacities must be positive");
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("p must lie in [0,1]");
  double thr1 = (mu2 - mu1) / mu2;
  double thr2 = mu2 / (mu1 + mu2);
  if (thr1 > 0.0 && p <= thr1) return mu2;
  if (p <= thr2) return mu1 / (1.0 - p);
  return mu2 / p;
}

double w_model_lambda_R(double mu1, double mu2, double p1, double p2, double p12) {
  if (!(mu1 > 0.0) || !(mu2 > 0.0)) throw ConfigError("capacities must be positive");
  if (std::abs(p1 + p2 + p12 - 1.0) > tol::kProbSum)
    throw ConfigError("probabilities must sum to 1");
  // relabel so the load on server 1 is the larger one
  if ((1.0 - p2) / mu1 < (1.0 - p1) / mu2) {
    std::swap(mu1, mu2);
    std::swap(p1, p2);
  }
  if ((1.0 - p2) / mu1 == (1.0 - p1) / mu2) return mu2 / (1.0 - p1);
  if (p1 <= mu1 / (mu1 + mu2)) return mu2 / (1.0 - p1);
  return mu1 / p1;
}

std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Stable: return "stable";
    case Verdict::Unstable: return "unstable";
    case Verdict::Critical: return "critical";
  }
  return "?";
}

std::vector<Verdict> classify_servers(const Topology& top) {
  SubsystemChain chain = subsystem_chain(top);
  const double lambda = top.lambda;
  std::vector<Verdict> out(top.num_servers(), Verdict::Stable);
  for (int s = 0; s < top.num_servers(); ++s) {
    bool critical = false;
    for (int l = 1; l <= chain.last_stage_of_server[s]; ++l) {
      double car = chain.car(l);
      if (std::abs(lambda - car) <= tol::kCritical * car) {
        critical = true;
      } else if (lambda > car) {
        out[s] = Verdict::Unstable;
        break;
      }
    }
    if (out[s] != Verdict::Unstable && critical) out[s] = Verdict::Critical;
  }
  return out;
}

Improvement improvement_verdict(const Topology& top) {
  double lr = lambda_R(top);
  double lb = lambda_B(top);
  return {lr >= lb, lr / lb};
}

double mu_star(const std::function<Topology(double)>& family, double lo, double hi) {
  auto gap = [&](double mu) {
    Topology t = family(mu);
    return lambda_R(t) - lambda_B(t);
  };
  double flo = gap(lo), fhi = gap(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0))
    throw RuntimeError("mu_star: lambda_R - lambda_B does not change sign on the bracket");
  while (hi - lo > tol::kMuStar) {
    double mid = 0.5 * (lo + hi);
    double fm = gap(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

StabilityReport analyze(const Topology& top) {
  StabilityReport r;
  r.chain = subsystem_chain(top);
  r.lambda_R = r.chain.min_car();
  r.lambda_B = lambda_B(top);
  r.lambda_J = lambda_J(top);
  r.lambda = top.lambda;
  r.verdicts = classify_servers(top);
  r.redundancy_beats_bernoulli = r.lambda_R >= r.lambda_B;
  return r;
}

}  // namespace redlab
