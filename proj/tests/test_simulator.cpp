#include <doctest.h>

#include <cmath>

#include "redlab/common.hpp"
#include "redlab/simulator.hpp"
#include "redlab/stability.hpp"
#include "redlab/topology.hpp"

using namespace redlab;

namespace {

Topology single_server(double lambda) {
  Topology t;
  t.capacities = {1.0};
  t.types = {{{0}, 1.0}};
  t.lambda = lambda;
  return validate_topology(t);
}

Topology w_two_queues(double lambda) {
  // flexible type absent: every policy degenerates to two independent queues
  return make_nested(NestedKind::W, {1, 2}, {0.35, 0.65, 0.0}, lambda);
}

Topology hetero_red2(double lambda) {
  Topology t;
  t.capacities = {1, 2, 4, 5};
  t.types = {{{0, 1}, 0.25}, {{0, 2}, 0.1}, {{0, 3}, 0.1},
             {{1, 2}, 0.2},  {{1, 3}, 0.2}, {{2, 3}, 0.15}};
  t.lambda = lambda;
  return validate_topology(t);
}

}  // namespace

TEST_CASE("single PS server matches the birth-death mean") {
  for (double rho : {0.3, 0.5}) {
    SimConfig cfg;
    cfg.topology = single_server(rho);
    cfg.seed = 7;
    cfg.busy_periods = 30000;
    cfg.check_invariants = false;
    SimResult res = run(cfg);
    double expect = rho / (1 - rho);
    CHECK(!res.diverged);
    CHECK(std::abs(res.mean_jobs - expect) <= std::max(res.ci_half_width, 0.02 * expect) * 1.5);
  }
}

TEST_CASE("zero arrivals produce an empty run") {
  SimConfig cfg;
  cfg.topology = single_server(0.0);
  cfg.busy_periods = 10;
  SimResult res = run(cfg);
  CHECK(res.mean_jobs == 0.0);
  CHECK(res.completed_jobs == 0);
  CHECK(!res.diverged);
}

TEST_CASE("runs are bit-reproducible") {
  SimConfig cfg;
  cfg.topology = hetero_red2(6.0);
  cfg.seed = 99;
  cfg.busy_periods = 2000;
  SimResult a = run(cfg);
  SimResult b = run(cfg);
  CHECK(a.mean_jobs == b.mean_jobs);
  CHECK(a.ci_half_width == b.ci_half_width);
  CHECK(a.completed_jobs == b.completed_jobs);
  CHECK(a.sim_time == b.sim_time);
  CHECK(a.per_server_mean_copies == b.per_server_mean_copies);

  SimConfig cfg2 = cfg;
  cfg2.seed = 100;
  SimResult c = run(cfg2);
  CHECK(a.mean_jobs != c.mean_jobs);
}

TEST_CASE("structural invariants hold along a run") {
  for (Scheduling sched : {Scheduling::Ps, Scheduling::Fcfs, Scheduling::Ros}) {
    for (Dispatch disp : {Dispatch::Redundancy, Dispatch::Bernoulli, Dispatch::Jsq}) {
      SimConfig cfg;
      cfg.topology = hetero_red2(6.0);
      cfg.dispatch = disp;
      cfg.scheduling = sched;
      cfg.seed = 3;
      cfg.busy_periods = 300;
      cfg.check_invariants = true;  // the engine walks its state every event
      SimResult res = run(cfg);
      CHECK(res.completed_jobs > 0);
    }
  }
}

TEST_CASE("bound variants keep their invariants") {
  for (Variant v : {Variant::UpperBound, Variant::LowerBound}) {
    SimConfig cfg;
    cfg.topology = hetero_red2(6.0);
    cfg.variant = v;
    cfg.seed = 5;
    cfg.busy_periods = 300;
    cfg.check_invariants = true;
    SimResult res = run(cfg);
    CHECK(res.completed_jobs > 0);
  }
}

TEST_CASE("single-server types make all dispatch policies coincide") {
  SimConfig cfg;
  cfg.topology = w_two_queues(1.5);
  cfg.seed = 11;
  cfg.busy_periods = 500;
  SimResult red = run_trajectory(cfg, 300.0);
  cfg.dispatch = Dispatch::Bernoulli;
  SimResult ber = run_trajectory(cfg, 300.0);
  cfg.dispatch = Dispatch::Jsq;
  SimResult jsq = run_trajectory(cfg, 300.0);

  REQUIRE(red.traj_time.size() == ber.traj_time.size());
  REQUIRE(red.traj_time.size() == jsq.traj_time.size());
  CHECK(red.traj_time == ber.traj_time);
  CHECK(red.traj_copies == ber.traj_copies);
  CHECK(red.traj_time == jsq.traj_time);
  CHECK(red.traj_copies == jsq.traj_copies);
}

TEST_CASE("two independent queues match the product-form mean") {
  SimConfig cfg;
  cfg.topology = w_two_queues(1.5);
  cfg.seed = 13;
  cfg.busy_periods = 60000;
  SimResult res = run(cfg);
  double expect = 0.525 / 0.475 + 0.4875 / 0.5125;  // 2.0565
  CHECK(std::abs(res.mean_jobs - expect) <= std::max(res.ci_half_width, 0.02 * expect) * 1.5);
}

TEST_CASE("trajectory capture") {
  SimConfig cfg;
  cfg.topology = hetero_red2(0.0);
  cfg.initial_jobs = {2, 1, 0, 0, 0, 0};
  cfg.seed = 17;
  SimResult res = run_trajectory(cfg, 50.0);
  REQUIRE(!res.traj_time.empty());
  // first snapshot is the injected state: M = (3, 2, 1, 0)
  CHECK(res.traj_copies.front() == std::vector<long>{3, 2, 1, 0});
  // drains to empty with no arrivals
  CHECK(res.traj_copies.back() == std::vector<long>{0, 0, 0, 0});
  // copies never negative and monotone event times
  for (std::size_t i = 1; i < res.traj_time.size(); ++i)
    CHECK(res.traj_time[i] >= res.traj_time[i - 1]);

  SimConfig empty_cfg;
  empty_cfg.topology = single_server(0.0);
  SimResult flat = run_trajectory(empty_cfg, 10.0);
  CHECK(flat.mean_jobs == 0.0);
}

TEST_CASE("modulated capacities slow the system down") {
  SimConfig cfg;
  cfg.topology = single_server(0.2);
  cfg.seed = 23;
  cfg.busy_periods = 4000;
  SimResult base = run(cfg);

  cfg.modulation = dolly_modulation(1.0);
  cfg.check_invariants = true;
  SimResult slowed = run(cfg);
  // expected capacity drops well below 1, so the queue grows
  CHECK(slowed.mean_jobs > base.mean_jobs);
  CHECK(slowed.completed_jobs > 0);
}

TEST_CASE("divergence guard trips on an unstable run") {
  SimConfig cfg;
  cfg.topology = single_server(1.5);  // overloaded
  cfg.seed = 29;
  cfg.busy_periods = 1000000;
  cfg.max_events = 20000;
  SimResult res = run(cfg);
  CHECK(res.diverged);
  CHECK(res.mean_jobs > 0.0);
}

TEST_CASE("config validation") {
  SimConfig cfg;
  cfg.topology = single_server(0.5);
  cfg.busy_periods = 0;
  CHECK_THROWS_AS(run(cfg), ConfigError);

  cfg.busy_periods = 10;
  cfg.variant = Variant::UpperBound;
  cfg.dispatch = Dispatch::Bernoulli;
  CHECK_THROWS_AS(run(cfg), ConfigError);

  cfg.dispatch = Dispatch::Redundancy;
  cfg.scheduling = Scheduling::Fcfs;
  CHECK_THROWS_AS(run(cfg), ConfigError);

  cfg.scheduling = Scheduling::Ps;
  cfg.initial_jobs = {1, 2};
  CHECK_THROWS_AS(run(cfg), ConfigError);
}

TEST_CASE("frontier heuristic separates clearly stable from clearly unstable") {
  Topology t = w_two_queues(0.0);
  auto pts = estimate_stability_frontier(t, Dispatch::Redundancy, Scheduling::Ps,
                                         {0.1, 0.5 * 2.857, 1.4 * 2.857}, 150000, 31);
  CHECK(!pts[0].diverged);  // nearly idle
  CHECK(!pts[1].diverged);
  CHECK(pts[2].diverged);
}

TEST_CASE("slope fit flags a trend and not a constant") {
  std::vector<double> x, flat, rising;
  for (int i = 0; i < 40; ++i) {
    x.push_back(i);
    flat.push_back(5.0 + ((i * 2654435761u) % 97) / 97.0);  // bounded noise
    rising.push_back(0.5 * i + ((i * 40503u) % 13) / 13.0);
  }
  auto f1 = fit_slope(x, flat);
  CHECK(std::abs(f1.slope) < 0.02);
  auto f2 = fit_slope(x, rising);
  CHECK(f2.slope > 0.4);
  CHECK(f2.t_stat > 3.0);
}
