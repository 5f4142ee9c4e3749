#include <doctest.h>

#include <cmath>

#include "redlab/common.hpp"
#include "redlab/experiments.hpp"
#include "redlab/json_io.hpp"
#include "redlab/stability.hpp"

using namespace redlab;

namespace {

double cell(const std::vector<TableCell>& cells, const std::string& model,
            const std::string& quantity, double param) {
  for (const auto& c : cells)
    if (c.model == model && c.quantity == quantity && c.param == param) return c.value;
  FAIL("cell not found: ", model, " ", quantity, " ", param);
  return 0.0;
}

}  // namespace

TEST_CASE("table spot checks") {
  auto t2 = reproduce_table(2);
  CHECK(cell(t2, "Red-2 K=5", "lambda_R", 1.4) == doctest::Approx(9.1467).epsilon(1e-3));
  CHECK(cell(t2, "Red-3 K=10", "lambda_R", 2.0) == doctest::Approx(320.0).epsilon(1e-9));
  CHECK(cell(t2, "Red-2 K=3", "lambda_B", 2.0) == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(cell(t2, "Red-2 K=3", "mu_star", 0.0) == doctest::Approx(std::sqrt(2.0)).epsilon(2e-4));

  auto t3 = reproduce_table(3);
  CHECK(cell(t3, "Red-2 K=10", "lambda_R", 6.0) == doctest::Approx(30.0).epsilon(1e-9));
  CHECK(cell(t3, "Red-2 K=4", "lambda_R", 4.0) == doctest::Approx(8.0).epsilon(1e-9));

  auto t4 = reproduce_table(4);
  CHECK(cell(t4, "WW", "lambda_R", 4.0) == doctest::Approx(7.0).epsilon(1e-9));
  CHECK(cell(t4, "W", "mu_star", 0.0) == doctest::Approx(4.0 / 3).epsilon(2e-4));

  CHECK_THROWS_AS(reproduce_table(5), ConfigError);
}

TEST_CASE("table output is byte-stable") {
  for (int id : {2, 3, 4}) {
    std::string a = table_csv(id);
    std::string b = table_csv(id);
    CHECK(a == b);
    CHECK(a.find("table,model,param_kind,param,quantity,value") == 0);
  }
}

TEST_CASE("analytic-only sweep rows carry the frontier columns") {
  SweepSpec spec;
  spec.family = "w_model_p12_sweep";
  spec.p1 = 0.35;
  spec.mu1 = 1.0;
  spec.mu2 = 2.0;
  spec.p12_grid = {0.0, 0.25, 0.5};
  spec.lambda_grid = {1.5};
  auto rows = sweep_mean_jobs(spec);
  REQUIRE(rows.size() == 3);
  for (const auto& r : rows) {
    CHECK(r.policy == "-");
    double p12 = r.param;
    double expect = w_model_lambda_R(1.0, 2.0, 0.35, 1.0 - 0.35 - p12, p12);
    CHECK(r.lambda_R == doctest::Approx(expect).epsilon(1e-9));
    CHECK(r.lambda_B <= r.lambda_J * (1 + 1e-9));
  }
}

TEST_CASE("simulated sweep row matches the two-queue value") {
  SweepSpec spec;
  spec.family = "w_model_p12_sweep";
  spec.p1 = 0.35;
  spec.p12_grid = {0.0};
  spec.lambda_grid = {1.5};
  spec.policies = {Dispatch::Redundancy, Dispatch::Bernoulli};
  spec.busy_periods = 30000;
  spec.seed = 3;
  auto rows = sweep_mean_jobs(spec);
  REQUIRE(rows.size() == 3);  // one analytic + two simulated
  double expect = 0.525 / 0.475 + 0.4875 / 0.5125;
  int simulated = 0;
  for (const auto& r : rows) {
    if (r.policy == "-") continue;
    ++simulated;
    CHECK(!r.diverged);
    CHECK(std::abs(r.mean_jobs - expect) <= std::max(r.ci, 0.02 * expect) * 1.5);
  }
  CHECK(simulated == 2);
}

TEST_CASE("policy ordering at a matched operating point") {
  // least-jobs routing beats copies, copies beat blind routing (within CI)
  SweepSpec spec;
  spec.family = "w_model_p12_sweep";
  spec.p1 = 0.35;
  spec.p12_grid = {0.25};
  spec.lambda_grid = {1.5};
  spec.policies = {Dispatch::Redundancy, Dispatch::Bernoulli, Dispatch::Jsq};
  spec.busy_periods = 60000;
  spec.seed = 5;
  auto rows = sweep_mean_jobs(spec);
  double red = 0, ber = 0, jsq = 0, red_ci = 0, ber_ci = 0, jsq_ci = 0;
  for (const auto& r : rows) {
    if (r.policy == "redundancy") red = r.mean_jobs, red_ci = r.ci;
    if (r.policy == "bernoulli") ber = r.mean_jobs, ber_ci = r.ci;
    if (r.policy == "jsq") jsq = r.mean_jobs, jsq_ci = r.ci;
  }
  REQUIRE(red > 0);
  CHECK(jsq <= red + jsq_ci + red_ci);
  CHECK(red <= ber + red_ci + ber_ci);
}

TEST_CASE("rows violating the CI budget are flagged, not dropped") {
  SweepSpec spec;
  spec.family = "w_model_p12_sweep";
  spec.p1 = 0.35;
  spec.p12_grid = {0.25};
  spec.lambda_grid = {2.0};
  spec.policies = {Dispatch::Redundancy};
  spec.busy_periods = 200;  // deliberately noisy
  spec.max_ci = 1e-6;
  auto rows = sweep_mean_jobs(spec);
  bool saw_flag = false;
  for (const auto& r : rows)
    if (r.policy != "-") saw_flag = saw_flag || r.ci_exceeded;
  CHECK(saw_flag);
}

TEST_CASE("modulated sweep produces rows") {
  SweepSpec spec;
  spec.family = "dolly_modulated";
  spec.lambda_grid = {0.3};
  spec.epsilon = 1.0;
  spec.policies = {Dispatch::Redundancy, Dispatch::Bernoulli};
  spec.busy_periods = 400;
  auto rows = sweep_mean_jobs(spec);
  int simulated = 0;
  for (const auto& r : rows)
    if (r.policy != "-") {
      ++simulated;
      CHECK(r.mean_jobs > 0.0);
    }
  CHECK(simulated == 6);  // three systems, two policies
}

TEST_CASE("sweep csv and manifest") {
  SweepSpec spec;
  spec.family = "red_d_geometric";
  spec.K = 3;
  spec.d = 2;
  spec.mu_grid = {1.0, 2.0};
  auto rows = sweep_mean_jobs(spec);
  std::string csv = sweep_csv(rows);
  CHECK(csv.find("family,param_name,param,lambda,policy") == 0);
  CHECK(csv.find("red_d_geometric") != std::string::npos);
  std::string manifest = sweep_manifest_json(spec);
  CHECK(manifest.find("\"seed\"") != std::string::npos);

  SweepSpec bad;
  bad.family = "no_such_family";
  CHECK_THROWS_AS(sweep_mean_jobs(bad), ConfigError);
}
