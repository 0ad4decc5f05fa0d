// SPDX-License-Identifier: Apache-2.0
//
// Exact solvers for the linear (unregularized) transportation problem
//
//   min <G, S>  s.t.  S 1 = alpha,  S^T 1 = beta,  S >= 0.
//
// solve_lot is the production engine (network simplex); solve_lot_oracle is
// an independent successive-shortest-path solver kept as a correctness
// reference for small instances.
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cyclic_ot/core.hpp"
#include "cyclic_ot/matrix.hpp"

namespace cyclic_ot {

struct LotSolution {
  Matrix plan;
  double value = 0.0;
  // Dual certificate: u_i + v_j <= G_ij, with equality where plan > 0.
  // Empty for the oracle.
  std::vector<double> u;
  std::vector<double> v;
  bool negative_costs = false;
  SolveReport report;
};

/// Network simplex. Masses are rescaled to 64-bit integers so pivots are
/// exact; alpha and beta must have equal totals within 1e-12.
LotSolution solve_lot(std::span<const double> alpha,
                      std::span<const double> beta, const Matrix& cost);

inline constexpr std::size_t kOracleMaxSize = 64;

/// Successive shortest paths (Bellman-Ford on the residual graph). Limited to
/// kOracleMaxSize sources and sinks.
LotSolution solve_lot_oracle(std::span<const double> alpha,
                             std::span<const double> beta, const Matrix& cost);

}  // namespace cyclic_ot
