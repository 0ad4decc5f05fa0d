// SPDX-License-Identifier: Apache-2.0
//
// Linear OT with cyclic symmetry, solved through a single m x m transport
// problem. The reduced cost is the elementwise minimum over the circulant
// blocks; each unit of reduced flow is then placed in the block attaining
// that minimum.
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cyclic_ot/core.hpp"
#include "cyclic_ot/matrix.hpp"

namespace cyclic_ot {

struct AggregatedCost {
  Matrix min_cost;              // G_ij = min_k C_k(i,j)
  std::vector<int> argmin;      // row-major; smallest k attaining G_ij
  std::size_t order = 0;

  int argmin_at(std::size_t i, std::size_t j) const {
    return argmin[i * min_cost.cols() + j];
  }
};

AggregatedCost aggregate_cost(std::span<const Matrix> blocks,
                              ExecPolicy policy = ExecPolicy::kParallel);

/// T_k(i,j) = S(i,j) if k == argmin(i,j), else 0.
std::vector<Matrix> lift_solution(const Matrix& reduced_plan,
                                  const AggregatedCost& agg);

struct CyclicSolution {
  TransportPlan plan;  // block form
  SolveReport report;  // objective is on the full (d x d) scale
};

/// Exact cyclic LOT. report.extras["small_objective"] holds the m x m value;
/// report.objective is n times that.
CyclicSolution solve_clot(const CyclicProblem& problem,
                          ExecPolicy policy = ExecPolicy::kParallel);

/// The tempting shortcut that solves only the k = 0 block and replicates it.
/// It ignores transport across blocks and is generally suboptimal; kept as a
/// regression baseline.
CyclicSolution solve_first_block_only(const CyclicProblem& problem);

}  // namespace cyclic_ot
