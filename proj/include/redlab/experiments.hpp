#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "redlab/simulator.hpp"
#include "redlab/topology.hpp"

namespace redlab {

// Frontier tables over capacity-heterogeneity grids. Every numeric cell is
// recomputed from the stability module; nothing is hard-coded.
struct TableCell {
  std::string model;       // "Red-2 K=5", "W", ...
  std::string param_kind;  // "mu" or "M"
  double param = 0.0;      // 0 marks the mu_star column
  std::string quantity;    // "lambda_R", "lambda_B", "mu_star"
  double value = 0.0;
};

std::vector<TableCell> reproduce_table(int table_id);  // 2, 3 or 4
std::string table_csv(int table_id);

// Parameter sweeps around the simulator. Analytic frontier columns are
// attached to every row; rows are simulated when sim options are present.
struct SweepSpec {
  std::string family;  // red_d_geometric | red_d_linear | nested_geometric |
                       // nested_linear | w_model_p12_sweep | w_model_mu2_sweep |
                       // dolly_modulated
  // family parameters
  int K = 2, d = 2;
  std::string nested = "W";
  std::vector<double> mu_grid;      // geometric bases or mu2 values
  std::vector<double> M_grid;       // linear capacity spans
  std::vector<double> p12_grid;
  double mu1 = 1.0, mu2 = 2.0;
  double p1 = 0.35;
  std::vector<double> lambda_grid;
  double epsilon = 1.0;             // modulation clock mean (dolly family)

  // simulation options; empty policies = analytic rows only
  std::vector<Dispatch> policies;
  std::vector<Scheduling> schedulings = {Scheduling::Ps};
  ServiceDistribution service = ServiceDistribution::exponential();
  std::uint64_t seed = 1;
  long busy_periods = 100000;
  long max_events = 50000000;
  double max_ci = 0.0;  // > 0: rows with wider CIs are flagged

  void validate() const;
};

struct SweepRow {
  std::string family;
  std::string param_name;
  double param = 0.0;
  double lambda = 0.0;
  std::string policy;      // "-" for analytic rows
  std::string scheduling;  // "-"
  double mean_jobs = 0.0;
  double ci = 0.0;
  double lambda_R = 0.0;
  double lambda_B = 0.0;
  double lambda_J = 0.0;
  bool diverged = false;
  bool ci_exceeded = false;
};

std::vector<SweepRow> sweep_mean_jobs(const SweepSpec& spec);
std::string sweep_csv(const std::vector<SweepRow>& rows);

// worker pool size: REDLAB_THREADS if set, else hardware concurrency
int worker_count();

}  // namespace redlab
