#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "redlab/fluid.hpp"
#include "redlab/simulator.hpp"
#include "redlab/stability.hpp"

using namespace redlab;

namespace {

Topology hetero_red2(double lambda) {
  Topology t;
  t.capacities = {1, 2, 4, 5};
  t.types = {{{0, 1}, 0.25}, {{0, 2}, 0.1}, {{0, 3}, 0.1},
             {{1, 2}, 0.2},  {{1, 3}, 0.2}, {{2, 3}, 0.15}};
  t.lambda = lambda;
  return validate_topology(t);
}

// Sup-norm gap between the scaled bound-system sample path and the fluid
// schedule, over a fixed grid of the fluid time axis.
double fluid_gap(const Topology& top, const std::vector<long>& base_jobs, long scale,
                 std::uint64_t seed) {
  std::vector<double> mass(top.num_servers(), 0.0);
  for (std::size_t c = 0; c < base_jobs.size(); ++c)
    for (int s : top.types[c].servers) mass[s] += static_cast<double>(base_jobs[c]);
  FluidTrajectory fl = ub_drain_schedule(top, mass, ServiceDistribution::exponential());
  double t_end = fl.drain_events.empty() ? fl.horizon : fl.drain_events.back().time;

  SimConfig cfg;
  cfg.topology = top;
  cfg.variant = Variant::UpperBound;
  cfg.seed = seed;
  cfg.initial_jobs.assign(base_jobs.size(), 0);
  for (std::size_t c = 0; c < base_jobs.size(); ++c) cfg.initial_jobs[c] = base_jobs[c] * scale;
  SimResult res = run_trajectory(cfg, t_end * static_cast<double>(scale));

  double gap = 0.0;
  const int grid = 200;
  std::size_t cursor = 0;
  for (int g = 0; g <= grid; ++g) {
    double tf = t_end * g / grid;
    double ts = tf * static_cast<double>(scale);
    while (cursor + 1 < res.traj_time.size() && res.traj_time[cursor + 1] <= ts) ++cursor;
    for (int s = 0; s < top.num_servers(); ++s) {
      double scaled = static_cast<double>(res.traj_copies[cursor][s]) / scale;
      gap = std::max(gap, std::abs(scaled - fl.mass_at(s, tf)));
    }
  }
  return gap;
}

}  // namespace

TEST_CASE("bound systems sandwich the original pathwise") {
  SimConfig cfg;
  cfg.topology = hetero_red2(7.5);
  cfg.lb_stage = 1;
  for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
    cfg.seed = seed;
    auto rep = run_coupled_bounds(cfg, 10000);
    CHECK(rep.events == 10000);
    CHECK(rep.ub_violations == 0);
    CHECK(rep.lb_violations == 0);
  }
}

TEST_CASE("sandwich holds with initial backlog and deeper stages") {
  SimConfig cfg;
  cfg.topology = hetero_red2(7.5);
  cfg.initial_jobs = {8, 4, 4, 6, 6, 5};
  for (int stage : {1, 2, 3}) {
    cfg.lb_stage = stage;
    cfg.seed = 40 + stage;
    auto rep = run_coupled_bounds(cfg, 8000);
    CHECK(rep.ub_violations == 0);
    CHECK(rep.lb_violations == 0);
  }
}

TEST_CASE("sandwich holds on random topologies") {
  std::mt19937_64 gen(17);
  for (int it = 0; it < 6; ++it) {
    Topology t = testutil::random_topology(gen, 5, 6);
    std::uniform_real_distribution<double> u(0.5, 1.2);
    t.lambda = u(gen) * lambda_R(t);
    SimConfig cfg;
    cfg.topology = t;
    cfg.seed = 1000 + it;
    auto rep = run_coupled_bounds(cfg, 5000);
    CHECK(rep.ub_violations == 0);
    CHECK(rep.lb_violations == 0);
  }
}

TEST_CASE("zero arrivals: dominance is trivial and systems drain") {
  SimConfig cfg;
  cfg.topology = hetero_red2(0.0);
  cfg.initial_jobs = {5, 5, 5, 5, 5, 5};
  cfg.seed = 77;
  auto rep = run_coupled_bounds(cfg, 100000);
  CHECK(rep.ub_violations == 0);
  CHECK(rep.lb_violations == 0);
  CHECK(rep.events < 100000);  // ran out of work
}

TEST_CASE("scaled bound-system paths approach the drain schedule") {
  // the gap shrinks as the initial state and clock are scaled up
  Topology t = hetero_red2(7.5);
  std::vector<long> base = {30, 3, 2, 3, 2, 2};  // masses (35,35,8,6) mostly late-stage
  double g_small = fluid_gap(t, base, 20, 5);
  double g_large = fluid_gap(t, base, 80, 5);
  CHECK(g_large < g_small);
}

TEST_CASE("alpha trajectory matches the scaled equalized-capacity run") {
  // single surviving type at the last stage: initial jobs proportional to p
  Topology t = hetero_red2(9.0);
  SubsystemChain chain = subsystem_chain(t);
  const int stage = 3;
  double car = chain.car(stage);
  double alpha0 = 2.0;

  auto scaled_gap = [&](long r) {
    SimConfig cfg;
    cfg.topology = t;
    cfg.variant = Variant::LowerBound;
    cfg.lb_stage = stage;
    cfg.seed = 9;
    cfg.initial_jobs = {static_cast<long>(alpha0 * car * 0.25 * r), 0, 0, 0, 0, 0};
    double horizon = 30.0;
    SimResult res = run_trajectory(cfg, horizon * r);
    AlphaTrajectory al = lb_alpha_trajectory(t, stage, alpha0, horizon);
    double mu_lb = car * 0.25;  // equalized capacity of servers 0 and 1
    double gap = 0.0;
    std::size_t cursor = 0;
    for (int g = 0; g <= 100; ++g) {
      double tf = horizon * g / 100;
      double ts = tf * r;
      while (cursor + 1 < res.traj_time.size() && res.traj_time[cursor + 1] <= ts) ++cursor;
      double scaled = static_cast<double>(res.traj_copies[cursor][0]) / r / mu_lb;
      gap = std::max(gap, std::abs(scaled - al.value(tf)));
    }
    return gap;
  };

  double g_small = scaled_gap(25);
  double g_large = scaled_gap(100);
  CHECK(g_large < g_small);
}
