#pragma once

#include <string>
#include <vector>

#include "redlab/rng.hpp"

namespace redlab {

// Unit-mean service time distribution. Whatever parameters are given, samples
// are divided by the distribution's true mean so that every kind has mean 1;
// rescale lambda instead of the job sizes.
struct ServiceDistribution {
  enum class Kind { Exponential, Deterministic, Hyperexponential, BoundedPareto };

  Kind kind = Kind::Exponential;
  double q = 0.0, mu1 = 0.0, mu2 = 0.0;      // hyperexponential
  double alpha = 0.0, k = 0.0, qmax = 0.0;   // bounded Pareto
  double scale = 1.0;                        // raw mean; samples are divided by it

  static ServiceDistribution exponential();
  static ServiceDistribution deterministic();
  static ServiceDistribution hyperexp(double q, double mu1, double mu2);
  static ServiceDistribution bounded_pareto(double alpha, double k, double qmax);

  double sample(Rng& rng) const;

  // mean of the raw (unscaled) distribution
  double raw_mean() const { return scale; }

  bool has_atoms() const { return kind == Kind::Deterministic; }

  std::string kind_name() const;
};

// Markov-modulated server capacities: each server carries an independent
// exponential clock with mean epsilon; at every ring it samples a slowdown S
// from the pmf and runs at capacity mu_s / S until the next ring.
struct SlowdownEntry {
  double s = 1.0;
  double p = 0.0;
};

struct CapacityModulation {
  double epsilon = 0.0;  // mean time between rings (required, no default)
  std::vector<SlowdownEntry> pmf;

  void validate() const;  // throws ConfigError
  double sample_slowdown(Rng& rng) const;
};

// The 12-point empirical slowdown distribution from production traces.
CapacityModulation dolly_modulation(double epsilon);

}  // namespace redlab
