#pragma once

#include <limits>
#include <queue>
#include <vector>

namespace redlab {

// Dinic max-flow on a small graph. Only used for the static-split feasibility
// oracle, so simplicity beats asymptotics here.
class MaxFlow {
 public:
  explicit MaxFlow(int n) : g_(n) {}

  void add_edge(int from, int to, double cap) {
    g_[from].push_back({to, static_cast<int>(g_[to].size()), cap});
    g_[to].push_back({from, static_cast<int>(g_[from].size()) - 1, 0.0});
  }

  double run(int source, int sink) {
    double flow = 0.0;
    while (bfs(source, sink)) {
      it_.assign(g_.size(), 0);
      while (true) {
        double f = dfs(source, sink, std::numeric_limits<double>::infinity());
        if (f <= 0.0) break;
        flow += f;
      }
    }
    return flow;
  }

 private:
  struct Edge {
    int to;
    int rev;
    double cap;
  };

  bool bfs(int source, int sink) {
    level_.assign(g_.size(), -1);
    std::queue<int> q;
    level_[source] = 0;
    q.push(source);
    while (!q.empty()) {
      int v = q.front();
      q.pop();
      for (const Edge& e : g_[v]) {
        if (e.cap > 1e-15 && level_[e.to] < 0) {
          level_[e.to] = level_[v] + 1;
          q.push(e.to);
        }
      }
    }
    return level_[sink] >= 0;
  }

  double dfs(int v, int sink, double f) {
    if (v == sink) return f;
    for (int& i = it_[v]; i < static_cast<int>(g_[v].size()); ++i) {
      Edge& e = g_[v][i];
      if (e.cap > 1e-15 && level_[v] < level_[e.to]) {
        double d = dfs(e.to, sink, std::min(f, e.cap));
        if (d > 0.0) {
          e.cap -= d;
          g_[e.to][e.rev].cap += d;
          return d;
        }
      }
    }
    return 0.0;
  }

  std::vector<std::vector<Edge>> g_;
  std::vector<int> level_;
  std::vector<int> it_;
};

}  // namespace redlab
