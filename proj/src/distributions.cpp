#include "redlab/distributions.hpp"

#include <cmath>
#include <sstream>

#include "redlab/common.hpp"

namespace redlab {

namespace {

// Density of the truncated Pareto on [k, qmax] with shape alpha:
//   f(x) = alpha k^alpha x^(-alpha-1) / (1 - (k/qmax)^alpha)
double pareto_density(double alpha, double k, double qmax, double x) {
  double norm = 1.0 - std::pow(k / qmax, alpha);
  return alpha * std::pow(k, alpha) * std::pow(x, -alpha - 1.0) / norm;
}

// Mean by composite Simpson on a log grid. A closed form exists; the tests
// use it as the independent check of this integral.
double pareto_mean_numeric(double alpha, double k, double qmax) {
  const int n = 20000;  // even
  double lo = std::log(k), hi = std::log(qmax);
  double h = (hi - lo) / n;
  // substitute x = e^u: integrand x f(x) dx = e^{2u} f(e^u) du
  auto g = [&](double u) {
    double x = std::exp(u);
    return x * x * pareto_density(alpha, k, qmax, x);
  };
  double sum = g(lo) + g(hi);
  for (int i = 1; i < n; ++i) sum += g(lo + i * h) * (i % 2 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

}  // namespace

ServiceDistribution ServiceDistribution::exponential() {
  ServiceDistribution d;
  d.kind = Kind::Exponential;
  d.scale = 1.0;
  return d;
}

ServiceDistribution ServiceDistribution::deterministic() {
  ServiceDistribution d;
  d.kind = Kind::Deterministic;
  d.scale = 1.0;
  return d;
}

ServiceDistribution ServiceDistribution::hyperexp(double q, double mu1, double mu2) {
  if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("hyperexp: q must lie in [0,1]");
  if (!(mu1 > 0.0) || !(mu2 > 0.0)) throw ConfigError("hyperexp: rates must be positive");
  ServiceDistribution d;
  d.kind = Kind::Hyperexponential;
  d.q = q;
  d.mu1 = mu1;
  d.mu2 = mu2;
  d.scale = q / mu1 + (1.0 - q) / mu2;
  return d;
}

ServiceDistribution ServiceDistribution::bounded_pareto(double alpha, double k, double qmax) {
  if (!(alpha > 0.0)) throw ConfigError("bounded_pareto: alpha must be positive");
  if (!(k > 0.0) || !(qmax > k)) throw ConfigError("bounded_pareto: need 0 < k < qmax");
  ServiceDistribution d;
  d.kind = Kind::BoundedPareto;
  d.alpha = alpha;
  d.k = k;
  d.qmax = qmax;
  d.scale = pareto_mean_numeric(alpha, k, qmax);
  return d;
}

double ServiceDistribution::sample(Rng& rng) const {
  switch (kind) {
    case Kind::Exponential:
      return rng.exponential(1.0);
    case Kind::Deterministic:
      return 1.0;
    case Kind::Hyperexponential: {
      double u = rng.uniform();
      double rate = (u <= q) ? mu1 : mu2;
      return rng.exponential(rate) / scale;
    }
    case Kind::BoundedPareto: {
      double u = rng.uniform();
      double trunc = 1.0 - std::pow(k / qmax, alpha);
      double x = k / std::pow(1.0 - u * trunc, 1.0 / alpha);
      return x / scale;
    }
  }
  return 1.0;
}

std::string ServiceDistribution::kind_name() const {
  switch (kind) {
    case Kind::Exponential: return "exponential";
    case Kind::Deterministic: return "deterministic";
    case Kind::Hyperexponential: return "hyperexp";
    case Kind::BoundedPareto: return "bounded_pareto";
  }
  return "?";
}

void CapacityModulation::validate() const {
  if (!(epsilon > 0.0)) throw ConfigError("modulation: epsilon must be positive");
  if (pmf.empty()) throw ConfigError("modulation: empty slowdown pmf");
  double sum = 0.0;
  for (const auto& e : pmf) {
    if (!(e.s >= 1.0)) {
      std::ostringstream os;
      os << "modulation: slowdown " << e.s << " must be >= 1";
      throw ConfigError(os.str());
    }
    if (!(e.p > 0.0)) throw ConfigError("modulation: slowdown probabilities must be positive");
    sum += e.p;
  }
  if (std::abs(sum - 1.0) > tol::kProbSum) {
    std::ostringstream os;
    os << "modulation: slowdown probabilities sum to " << sum;
    throw ConfigError(os.str());
  }
}

double CapacityModulation::sample_slowdown(Rng& rng) const {
  double u = rng.uniform();
  double acc = 0.0;
  for (const auto& e : pmf) {
    acc += e.p;
    if (u <= acc) return e.s;
  }
  return pmf.back().s;
}

CapacityModulation dolly_modulation(double epsilon) {
  CapacityModulation m;
  m.epsilon = epsilon;
  m.pmf = {{1, 0.23},  {2, 0.14},  {3, 0.09},   {4, 0.03},   {5, 0.08},   {6, 0.10},
           {7, 0.04},  {8, 0.14},  {9, 0.12},   {10, 0.021}, {11, 0.007}, {12, 0.002}};
  m.validate();
  return m;
}

}  // namespace redlab
