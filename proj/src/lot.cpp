// SPDX-License-Identifier: Apache-2.0
#include "cyclic_ot/lot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <sstream>

#include "cyclic_ot/timer.hpp"
#include "network_simplex.hpp"

namespace cyclic_ot {
namespace {

// Total integer mass after rescaling; leaves ~9x headroom below INT64_MAX.
constexpr double kIntegerMassTotal = 1e18;

struct CheckedInput {
  double alpha_total = 0.0;
  double beta_total = 0.0;
  bool negative_costs = false;
};

CheckedInput check_input(std::span<const double> alpha,
                         std::span<const double> beta, const Matrix& cost,
                         const char* who) {
  if (alpha.empty() || beta.empty()) {
    throw InvalidInput(std::string(who) + ": empty marginals");
  }
  if (cost.rows() != alpha.size() || cost.cols() != beta.size()) {
    throw InvalidInput(std::string(who) + ": cost shape does not match masses");
  }
  CheckedInput out;
  for (const auto* v : {&alpha, &beta}) {
    for (double x : *v) {
      if (!std::isfinite(x) || x < 0.0) {
        throw InvalidInput(std::string(who) +
                           ": masses must be finite and non-negative");
      }
    }
  }
  out.alpha_total = std::accumulate(alpha.begin(), alpha.end(), 0.0);
  out.beta_total = std::accumulate(beta.begin(), beta.end(), 0.0);
  const double scale = std::max(1.0, std::max(out.alpha_total, out.beta_total));
  if (std::abs(out.alpha_total - out.beta_total) > kMassTolerance * scale) {
    std::ostringstream msg;
    msg.precision(17);
    msg << who << ": infeasible masses (supply " << out.alpha_total
        << " != demand " << out.beta_total << ")";
    throw InvalidInput(msg.str());
  }
  for (double c : cost.values()) {
    if (!std::isfinite(c)) {
      throw InvalidInput(std::string(who) + ": non-finite cost");
    }
    if (c < 0.0) out.negative_costs = true;
  }
  return out;
}

void fill_report(LotSolution& sol, std::span<const double> alpha,
                 std::span<const double> beta, const Matrix& cost,
                 const char* tag) {
  sol.value = objective(cost, sol.plan);
  sol.report.algorithm = tag;
  sol.report.objective = sol.value;
  sol.report.marginal_error = marginal_error(sol.plan, beta);
  sol.report.row_marginal_error = row_marginal_error(sol.plan, alpha);
  sol.report.converged = true;
}

std::vector<std::int64_t> to_integer_mass(std::span<const double> v,
                                          double scale) {
  std::vector<std::int64_t> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::llround(v[i] * scale);
  return out;
}

}  // namespace

LotSolution solve_lot(std::span<const double> alpha,
                      std::span<const double> beta, const Matrix& cost) {
  Stopwatch watch;
  const CheckedInput in = check_input(alpha, beta, cost, "solve_lot");
  LotSolution sol;
  sol.negative_costs = in.negative_costs;
  sol.plan = Matrix(alpha.size(), beta.size());
  sol.u.assign(alpha.size(), 0.0);
  sol.v.assign(beta.size(), 0.0);

  const double total = std::max(in.alpha_total, in.beta_total);
  if (total > 0.0) {
    const double scale = kIntegerMassTotal / total;
    const std::vector<std::int64_t> supply = to_integer_mass(alpha, scale);
    std::vector<std::int64_t> demand = to_integer_mass(beta, scale);
    const std::int64_t diff =
        std::accumulate(supply.begin(), supply.end(), std::int64_t{0}) -
        std::accumulate(demand.begin(), demand.end(), std::int64_t{0});
    auto largest = std::max_element(demand.begin(), demand.end());
    *largest += diff;
    if (*largest < 0) {
      throw InvalidInput("solve_lot: mass imbalance exceeds the largest entry");
    }

    detail::NetworkSimplex simplex(supply, demand, cost);
    if (!simplex.run()) {
      throw NumericalError("solve_lot: network simplex reported infeasibility");
    }
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      for (std::size_t j = 0; j < beta.size(); ++j) {
        sol.plan(i, j) = static_cast<double>(simplex.flow(i, j)) / scale;
      }
    }
    // Reduced cost G_ij + pi_i - pi_j >= 0  <=>  u_i + v_j <= G_ij.
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      sol.u[i] = -simplex.source_potential(i);
    }
    for (std::size_t j = 0; j < beta.size(); ++j) {
      sol.v[j] = simplex.sink_potential(j);
    }
    sol.report.iterations = simplex.pivots();
  }
  fill_report(sol, alpha, beta, cost, "lot");
  if (in.negative_costs) sol.report.extras["negative_costs"] = 1.0;
  sol.report.wall_time = watch.seconds();
  return sol;
}

LotSolution solve_lot_oracle(std::span<const double> alpha,
                             std::span<const double> beta, const Matrix& cost) {
  Stopwatch watch;
  if (alpha.size() > kOracleMaxSize || beta.size() > kOracleMaxSize) {
    throw InvalidInput("solve_lot_oracle: size limit exceeded");
  }
  const CheckedInput in = check_input(alpha, beta, cost, "solve_lot_oracle");

  const int n1 = static_cast<int>(alpha.size());
  const int n2 = static_cast<int>(beta.size());
  const int source = 0;
  const int sink = n1 + n2 + 1;
  const int nodes = n1 + n2 + 2;
  const double inf = std::numeric_limits<double>::infinity();

  struct Edge {
    int to;
    double cap;
    double cost;
  };
  std::vector<Edge> edges;
  std::vector<std::vector<int>> adj(nodes);
  auto add_edge = [&](int u, int v, double cap, double c) {
    adj[u].push_back(static_cast<int>(edges.size()));
    edges.push_back({v, cap, c});
    adj[v].push_back(static_cast<int>(edges.size()));
    edges.push_back({u, 0.0, -c});
  };
  for (int i = 0; i < n1; ++i) add_edge(source, 1 + i, alpha[i], 0.0);
  std::vector<int> transport_edge(static_cast<std::size_t>(n1 * n2));
  for (int i = 0; i < n1; ++i) {
    for (int j = 0; j < n2; ++j) {
      transport_edge[i * n2 + j] = static_cast<int>(edges.size());
      add_edge(1 + i, 1 + n1 + j, inf, cost(i, j));
    }
  }
  for (int j = 0; j < n2; ++j) add_edge(1 + n1 + j, sink, beta[j], 0.0);

  const double total = std::min(in.alpha_total, in.beta_total);
  const double cap_eps = 1e-15 * std::max(1.0, total);
  double shipped = 0.0;
  long augmentations = 0;
  std::vector<double> dist(nodes);
  std::vector<int> via(nodes);
  while (total - shipped > cap_eps) {
    // Bellman-Ford: the residual graph never has negative cycles under SSP.
    std::fill(dist.begin(), dist.end(), inf);
    std::fill(via.begin(), via.end(), -1);
    dist[source] = 0.0;
    for (int round = 0; round < nodes; ++round) {
      bool relaxed = false;
      for (int u = 0; u < nodes; ++u) {
        if (dist[u] == inf) continue;
        for (int id : adj[u]) {
          const Edge& e = edges[id];
          if (e.cap <= cap_eps) continue;
          const double nd = dist[u] + e.cost;
          if (nd < dist[e.to] - 1e-15 * (1.0 + std::abs(nd))) {
            dist[e.to] = nd;
            via[e.to] = id;
            relaxed = true;
          }
        }
      }
      if (!relaxed) break;
    }
    if (dist[sink] == inf) break;
    double push = inf;
    for (int v = sink; v != source; v = edges[via[v] ^ 1].to) {
      push = std::min(push, edges[via[v]].cap);
    }
    for (int v = sink; v != source; v = edges[via[v] ^ 1].to) {
      edges[via[v]].cap -= push;
      edges[via[v] ^ 1].cap += push;
    }
    shipped += push;
    ++augmentations;
  }

  LotSolution sol;
  sol.negative_costs = in.negative_costs;
  sol.plan = Matrix(alpha.size(), beta.size());
  for (int i = 0; i < n1; ++i) {
    for (int j = 0; j < n2; ++j) {
      // Flow on a forward edge equals the capacity of its reverse edge.
      sol.plan(i, j) = edges[transport_edge[i * n2 + j] ^ 1].cap;
    }
  }
  fill_report(sol, alpha, beta, cost, "lot-oracle");
  sol.report.iterations = augmentations;
  sol.report.wall_time = watch.seconds();
  return sol;
}

}  // namespace cyclic_ot
