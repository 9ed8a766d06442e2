#pragma once

// Exact discrete optimal transport by successive shortest paths on the
// bipartite transport network (min-cost flow).  Used as an LP oracle.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace oracle {

/// min sum_ij cost(x_i, y_j) pi_ij subject to the marginals a, b (equal
/// total mass), with cost |x - y|^2.
inline double transport_cost(const std::vector<double>& x, const std::vector<double>& a,
                             const std::vector<double>& y, const std::vector<double>& b) {
  const std::size_t n = x.size(), m = y.size();
  // nodes: 0 source, 1..n supplies, n+1..n+m demands, n+m+1 sink
  const std::size_t nodes = n + m + 2, s = 0, t = n + m + 1;
  struct Edge {
    std::size_t to, rev;
    double cap, cost;
  };
  std::vector<std::vector<Edge>> g(nodes);
  const auto add = [&](std::size_t u, std::size_t v, double cap, double cost) {
    g[u].push_back({v, g[v].size(), cap, cost});
    g[v].push_back({u, g[u].size() - 1, 0.0, -cost});
  };
  const double inf = std::numeric_limits<double>::infinity();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    add(s, 1 + i, a[i], 0.0);
    total += a[i];
  }
  for (std::size_t j = 0; j < m; ++j) add(1 + n + j, t, b[j], 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) add(1 + i, 1 + n + j, inf, (x[i] - y[j]) * (x[i] - y[j]));

  const double eps = 1e-15 * std::max(total, 1.0);
  double cost = 0.0, sent = 0.0;
  for (int iter = 0; iter < 100000 && sent < total - eps; ++iter) {
    // Bellman-Ford (residual graph has negative reverse costs)
    std::vector<double> dist(nodes, inf);
    std::vector<std::size_t> pv(nodes, nodes), pe(nodes, 0);
    dist[s] = 0.0;
    for (std::size_t round = 0; round < nodes; ++round) {
      bool changed = false;
      for (std::size_t u = 0; u < nodes; ++u) {
        if (dist[u] == inf) continue;
        for (std::size_t k = 0; k < g[u].size(); ++k) {
          const Edge& e = g[u][k];
          if (e.cap > eps && dist[u] + e.cost < dist[e.to] - 1e-15) {
            dist[e.to] = dist[u] + e.cost;
            pv[e.to] = u;
            pe[e.to] = k;
            changed = true;
          }
        }
      }
      if (!changed) break;
    }
    if (dist[t] == inf) break;
    double push = inf;
    for (std::size_t v = t; v != s; v = pv[v]) push = std::min(push, g[pv[v]][pe[v]].cap);
    for (std::size_t v = t; v != s; v = pv[v]) {
      Edge& e = g[pv[v]][pe[v]];
      e.cap -= push;
      g[v][e.rev].cap += push;
    }
    sent += push;
    cost += push * dist[t];
  }
  if (sent < total * (1.0 - 1e-12)) throw std::runtime_error("transport_cost: flow incomplete");
  return cost;
}

}  // namespace oracle
