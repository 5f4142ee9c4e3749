#include "redlab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <functional>
#include <sstream>
#include <thread>
#include <tuple>

#include "redlab/common.hpp"
#include "redlab/stability.hpp"

namespace redlab {

int worker_count() {
  if (const char* env = std::getenv("REDLAB_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

namespace {

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  int workers = std::min<int>(worker_count(), static_cast<int>(n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        std::size_t i = next.fetch_add(1);
        if (i >= n) break;
        body(i);
      }
    });
  }
  for (auto& th : pool) th.join();
}

struct RedFamily {
  int K, d;
};

const std::vector<RedFamily> kRedRows = {{3, 2}, {4, 2}, {5, 2}, {10, 2},
                                         {4, 3}, {5, 3}, {10, 3}};
const std::vector<double> kGeometricGrid = {1.0, 1.2, 1.4, 2.0, 3.0};
const std::vector<double> kLinearGrid = {1.0, 2.0, 3.0, 4.0, 6.0};
const std::vector<std::string> kNestedRows = {"W", "WW", "WWWW"};
const std::vector<double> kNestedGeometricGrid = {1.0, 1.2, 1.4, 2.0};
const std::vector<double> kNestedLinearGrid = {1.0, 2.0, 4.0, 6.0, 8.0};

Topology nested_uniform(const std::string& name, const std::vector<double>& caps) {
  NestedKind kind = nested_kind_from_string(name);
  std::size_t n_types = kind == NestedKind::W ? 3 : (kind == NestedKind::WW ? 7 : 15);
  std::vector<double> probs(n_types, 1.0 / static_cast<double>(n_types));
  return make_nested(kind, caps, probs);
}

int nested_servers(const std::string& name) {
  return name == "W" ? 2 : (name == "WW" ? 4 : 8);
}

std::string red_label(const RedFamily& f) {
  std::ostringstream os;
  os << "Red-" << f.d << " K=" << f.K;
  return os.str();
}

}  // namespace

std::vector<TableCell> reproduce_table(int table_id) {
  std::vector<TableCell> cells;
  auto emit = [&](const std::string& model, const std::string& kind, double param,
                  const std::string& quantity, double value) {
    cells.push_back({model, kind, param, quantity, value});
  };

  if (table_id == 2) {
    for (const auto& f : kRedRows) {
      for (double mu : kGeometricGrid) {
        Topology t = make_red_d(f.K, f.d, geometric_capacities(f.K, mu));
        emit(red_label(f), "mu", mu, "lambda_R", lambda_R(t));
        emit(red_label(f), "mu", mu, "lambda_B", lambda_B(t));
      }
      double ms = mu_star(
          [&](double mu) { return make_red_d(f.K, f.d, geometric_capacities(f.K, mu)); }, 1.0,
          2.0);
      emit(red_label(f), "mu", 0.0, "mu_star", ms);
    }
  } else if (table_id == 3) {
    for (const auto& f : kRedRows) {
      for (double M : kLinearGrid) {
        Topology t = make_red_d(f.K, f.d, linear_capacities(f.K, M));
        emit(red_label(f), "M", M, "lambda_R", lambda_R(t));
        emit(red_label(f), "M", M, "lambda_B", lambda_B(t));
      }
    }
  } else if (table_id == 4) {
    for (const auto& name : kNestedRows) {
      int K = nested_servers(name);
      for (double mu : kNestedGeometricGrid) {
        Topology t = nested_uniform(name, geometric_capacities(K, mu));
        emit(name, "mu", mu, "lambda_R", lambda_R(t));
        emit(name, "mu", mu, "lambda_B", lambda_B(t));
      }
      double ms = mu_star(
          [&](double mu) { return nested_uniform(name, geometric_capacities(K, mu)); }, 1.0, 2.0);
      emit(name, "mu", 0.0, "mu_star", ms);
      for (double M : kNestedLinearGrid) {
        Topology t = nested_uniform(name, linear_capacities(K, M));
        emit(name, "M", M, "lambda_R", lambda_R(t));
        emit(name, "M", M, "lambda_B", lambda_B(t));
      }
    }
  } else {
    throw ConfigError("table id must be 2, 3 or 4");
  }
  return cells;
}

std::string table_csv(int table_id) {
  std::ostringstream os;
  os << "table,model,param_kind,param,quantity,value\n";
  for (const auto& c : reproduce_table(table_id)) {
    os << table_id << "," << c.model << "," << c.param_kind << "," << format12(c.param) << ","
       << c.quantity << "," << format12(c.value) << "\n";
  }
  return os.str();
}

void SweepSpec::validate() const {
  static const std::vector<std::string> families = {
      "red_d_geometric", "red_d_linear",      "nested_geometric", "nested_linear",
      "w_model_p12_sweep", "w_model_mu2_sweep", "dolly_modulated"};
  if (std::find(families.begin(), families.end(), family) == families.end())
    throw ConfigError("unknown sweep family: " + family);
  if (family == "red_d_geometric" || family == "nested_geometric") {
    if (mu_grid.empty()) throw ConfigError("sweep: mu_grid must be nonempty");
  }
  if (family == "red_d_linear" || family == "nested_linear") {
    if (M_grid.empty()) throw ConfigError("sweep: M_grid must be nonempty");
  }
  if (family == "w_model_p12_sweep" && p12_grid.empty())
    throw ConfigError("sweep: p12_grid must be nonempty");
  if (family == "w_model_mu2_sweep" && (mu_grid.empty() || p12_grid.empty()))
    throw ConfigError("sweep: mu2 sweep needs mu_grid and a fixed p12 in p12_grid");
  if ((family == "w_model_p12_sweep" || family == "w_model_mu2_sweep" ||
       family == "dolly_modulated") &&
      lambda_grid.empty())
    throw ConfigError("sweep: lambda_grid must be nonempty");
  if (!policies.empty() && busy_periods < 1)
    throw ConfigError("sweep: busy_periods must be >= 1 for simulated sweeps");
}

namespace {

struct SweepPoint {
  Topology topology;
  std::string param_name;
  double param;
  double lambda;
  std::optional<CapacityModulation> modulation;
};

std::vector<SweepPoint> build_points(const SweepSpec& spec) {
  std::vector<SweepPoint> pts;
  auto add = [&](Topology t, const std::string& pname, double param, double lambda) {
    t.lambda = lambda;
    SweepPoint p{std::move(t), pname, param, lambda, std::nullopt};
    if (spec.family == "dolly_modulated") p.modulation = dolly_modulation(spec.epsilon);
    pts.push_back(std::move(p));
  };

  if (spec.family == "red_d_geometric") {
    for (double mu : spec.mu_grid)
      add(make_red_d(spec.K, spec.d, geometric_capacities(spec.K, mu)), "mu", mu, 0.0);
  } else if (spec.family == "red_d_linear") {
    for (double M : spec.M_grid)
      add(make_red_d(spec.K, spec.d, linear_capacities(spec.K, M)), "M", M, 0.0);
  } else if (spec.family == "nested_geometric") {
    int K = nested_servers(spec.nested);
    for (double mu : spec.mu_grid)
      add(nested_uniform(spec.nested, geometric_capacities(K, mu)), "mu", mu, 0.0);
  } else if (spec.family == "nested_linear") {
    int K = nested_servers(spec.nested);
    for (double M : spec.M_grid)
      add(nested_uniform(spec.nested, linear_capacities(K, M)), "M", M, 0.0);
  } else if (spec.family == "w_model_p12_sweep") {
    for (double p12 : spec.p12_grid) {
      double p2 = 1.0 - spec.p1 - p12;
      if (p2 < 0.0) throw ConfigError("sweep: p1 + p12 exceeds 1");
      Topology t = make_nested(NestedKind::W, {spec.mu1, spec.mu2}, {spec.p1, p2, p12});
      for (double lambda : spec.lambda_grid) add(t, "p12", p12, lambda);
    }
  } else if (spec.family == "w_model_mu2_sweep") {
    for (double mu2 : spec.mu_grid) {
      double p2 = 1.0 - spec.p1 - spec.p12_grid.front();
      Topology t = make_nested(NestedKind::W, {spec.mu1, mu2},
                               {spec.p1, p2, spec.p12_grid.front()});
      for (double lambda : spec.lambda_grid) add(t, "mu2", mu2, lambda);
    }
  } else if (spec.family == "dolly_modulated") {
    // the three modulated systems: redundancy-2 and -4 over K=5, plus W
    for (double lambda : spec.lambda_grid) {
      add(make_red_d(5, 2, std::vector<double>(5, 1.0)), "red2", 2, lambda);
      add(make_red_d(5, 4, std::vector<double>(5, 1.0)), "red4", 4, lambda);
      add(nested_uniform("W", {1.0, 1.0}), "w", 0, lambda);
    }
  }
  return pts;
}

}  // namespace

std::vector<SweepRow> sweep_mean_jobs(const SweepSpec& spec) {
  spec.validate();
  std::vector<SweepPoint> pts = build_points(spec);

  struct Task {
    std::size_t point;
    Dispatch policy;
    Scheduling scheduling;
  };
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (Dispatch d : spec.policies)
      for (Scheduling s : spec.schedulings) tasks.push_back({i, d, s});

  std::vector<SweepRow> rows(pts.size() + tasks.size());

  // analytic frontier rows first
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const SweepPoint& p = pts[i];
    SweepRow r;
    r.family = spec.family;
    r.param_name = p.param_name;
    r.param = p.param;
    r.lambda = p.lambda;
    r.policy = "-";
    r.scheduling = "-";
    r.lambda_R = lambda_R(p.topology);
    r.lambda_B = lambda_B(p.topology);
    r.lambda_J = lambda_J(p.topology);
    rows[i] = std::move(r);
  }

  parallel_for(tasks.size(), [&](std::size_t k) {
    const Task& task = tasks[k];
    const SweepPoint& p = pts[task.point];
    SimConfig cfg;
    cfg.topology = p.topology;
    cfg.dispatch = task.policy;
    cfg.scheduling = task.scheduling;
    cfg.service = spec.service;
    cfg.modulation = p.modulation;
    cfg.busy_periods = spec.busy_periods;
    cfg.max_events = spec.max_events;
    // per-task seed, stable under reordering
    cfg.seed = spec.seed * 0x100000001b3ull + static_cast<std::uint64_t>(k) + 1;
    SimResult res = run(cfg);

    SweepRow r;
    r.family = spec.family;
    r.param_name = p.param_name;
    r.param = p.param;
    r.lambda = p.lambda;
    r.policy = dispatch_name(task.policy);
    r.scheduling = scheduling_name(task.scheduling);
    r.mean_jobs = res.mean_jobs;
    r.ci = res.ci_half_width;
    r.lambda_R = rows[task.point].lambda_R;
    r.lambda_B = rows[task.point].lambda_B;
    r.lambda_J = rows[task.point].lambda_J;
    r.diverged = res.diverged;
    r.ci_exceeded = spec.max_ci > 0.0 && res.ci_half_width > spec.max_ci;
    rows[pts.size() + k] = std::move(r);
  });

  std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return std::tie(a.param_name, a.param, a.lambda, a.policy, a.scheduling) <
           std::tie(b.param_name, b.param, b.lambda, b.policy, b.scheduling);
  });
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "family,param_name,param,lambda,policy,scheduling,mean_jobs,ci_half_width,"
        "lambda_R,lambda_B,lambda_J,diverged,ci_exceeded\n";
  for (const auto& r : rows) {
    os << r.family << "," << r.param_name << "," << format12(r.param) << ","
       << format12(r.lambda) << "," << r.policy << "," << r.scheduling << ","
       << format12(r.mean_jobs) << "," << format12(r.ci) << "," << format12(r.lambda_R) << ","
       << format12(r.lambda_B) << "," << format12(r.lambda_J) << "," << (r.diverged ? 1 : 0)
       << "," << (r.ci_exceeded ? 1 : 0) << "\n";
  }
  return os.str();
}

}  // namespace redlab
